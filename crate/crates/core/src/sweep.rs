//! Replicated parameter sweeps and their CSV form.
//!
//! Replica `r` of every sweep point runs with seed `master + r`, so points are
//! compared on common random numbers: the same placements, encounter traces
//! and content draws, differing only in the swept parameter.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::engine::{run_episode, Cost, EpisodeConfig, EpisodeMetrics};
use crate::error::{Error, Result};

const CSV_HEADER_COMMENT: &str = "# d2d-offload sweep v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Alpha,
    D2dMax,
    /// Control-signaling cost c_c as a fraction of V_c.
    CostFraction,
    WT,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Alpha, Axis::D2dMax, Axis::CostFraction, Axis::WT];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::D2dMax => "d2d_max",
            Axis::CostFraction => "cost_fraction",
            Axis::WT => "w_t",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &EpisodeConfig, value: f64) -> EpisodeConfig {
        let mut config = base.clone();
        match self {
            Axis::Alpha => config.alpha = value,
            Axis::D2dMax => config.d2d_max = value,
            Axis::CostFraction => config.costs.c_c = Cost::RateFraction(value),
            Axis::WT => config.w_t = value,
        }
        config
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    OffloadedTraffic,
    OffloadedTrafficTotal,
    EnbDataRateSum,
    D2dSuccessRatio,
    Requests,
    OffsnCount,
    WhiteAreaUsers,
    MeanUserUtility,
    MeanEnbUtility,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::OffloadedTraffic,
        Metric::OffloadedTrafficTotal,
        Metric::EnbDataRateSum,
        Metric::D2dSuccessRatio,
        Metric::Requests,
        Metric::OffsnCount,
        Metric::WhiteAreaUsers,
        Metric::MeanUserUtility,
        Metric::MeanEnbUtility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::OffloadedTraffic => "offloaded_traffic",
            Metric::OffloadedTrafficTotal => "offloaded_traffic_total",
            Metric::EnbDataRateSum => "enb_data_rate_sum",
            Metric::D2dSuccessRatio => "d2d_success_ratio",
            Metric::Requests => "requests",
            Metric::OffsnCount => "n_offsns",
            Metric::WhiteAreaUsers => "white_area_users",
            Metric::MeanUserUtility => "mean_u_user",
            Metric::MeanEnbUtility => "mean_u_enb",
        }
    }

    pub fn extract(self, m: &EpisodeMetrics) -> f64 {
        let a = &m.aggregates;
        let per_user_mean = |f: fn(&crate::engine::UserMetrics) -> f64| {
            if m.per_user.is_empty() {
                0.0
            } else {
                m.per_user.iter().map(f).sum::<f64>() / m.per_user.len() as f64
            }
        };
        match self {
            Metric::OffloadedTraffic => a.offloaded_traffic,
            Metric::OffloadedTrafficTotal => a.offloaded_traffic_total,
            Metric::EnbDataRateSum => a.enb_data_rate_sum,
            Metric::D2dSuccessRatio => a.d2d_success_ratio,
            Metric::Requests => a.requests as f64,
            Metric::OffsnCount => a.n_offsns as f64,
            Metric::WhiteAreaUsers => a.white_area_users as f64,
            Metric::MeanUserUtility => per_user_mean(|u| u.u_user),
            Metric::MeanEnbUtility => per_user_mean(|u| u.u_enb),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub replicas: u64,
    pub base: EpisodeConfig,
}

/// Mean and sample standard deviation of one metric at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub replicas: u64,
}

impl SweepRow {
    /// Normal-approximation 95% confidence interval of the mean.
    pub fn ci95(&self) -> (f64, f64) {
        let half = 1.96 * self.std / (self.replicas.max(1) as f64).sqrt();
        (self.mean - half, self.mean + half)
    }
}

pub fn replica_seed(master: u64, replica: u64) -> u64 {
    master.wrapping_add(replica)
}

/// Runs `replicas` episodes per value and returns one row per (value, metric),
/// values in the given order and metrics in [`Metric::ALL`] order.
pub fn run_sweep(spec: &SweepSpec, master_seed: u64) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    if spec.replicas == 0 {
        return Err(Error::config("replicas must be >= 1"));
    }
    let configs: Vec<EpisodeConfig> = spec.values.iter().map(|&v| spec.axis.apply(&spec.base, v)).collect();
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|i| (0..spec.replicas).map(move |r| (i, r)))
        .collect();
    let samples: Vec<[f64; Metric::ALL.len()]> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let config = EpisodeConfig {
                seed: replica_seed(master_seed, r),
                ..configs[i].clone()
            };
            let metrics = run_episode(&config)?;
            Ok(Metric::ALL.map(|m| m.extract(&metrics)))
        })
        .collect::<Result<_>>()?;

    let per_point = spec.replicas as usize;
    let mut rows = Vec::with_capacity(spec.values.len() * Metric::ALL.len());
    for (i, &value) in spec.values.iter().enumerate() {
        let block = &samples[i * per_point..(i + 1) * per_point];
        for (j, metric) in Metric::ALL.into_iter().enumerate() {
            let (mean, std) = mean_std(block.iter().map(|s| s[j]));
            rows.push(SweepRow {
                axis: spec.axis,
                value,
                metric,
                mean,
                std,
                replicas: spec.replicas,
            });
        }
    }
    Ok(rows)
}

/// Mean and sample standard deviation; the deviation is 0 for one sample.
pub fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER_COMMENT}")?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["axis", "value", "metric", "mean", "std", "replicas"])?;
    for row in rows {
        writer.write_record([
            row.axis.name().to_string(),
            row.value.to_string(),
            row.metric.name().to_string(),
            row.mean.to_string(),
            row.std.to_string(),
            row.replicas.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn parse_csv<R: Read>(source: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(source);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 3;
        let field = |idx: usize| {
            record
                .get(idx)
                .ok_or_else(|| Error::parse(line, format!("missing column {idx}")))
        };
        let number = |idx: usize| -> Result<f64> {
            field(idx)?
                .parse()
                .map_err(|_| Error::parse(line, format!("column {idx} is not a number")))
        };
        rows.push(SweepRow {
            axis: field(0)?.parse()?,
            value: number(1)?,
            metric: field(2)?.parse()?,
            mean: number(3)?,
            std: number(4)?,
            replicas: field(5)?
                .parse()
                .map_err(|_| Error::parse(line, "replicas is not an integer"))?,
        });
    }
    if rows.is_empty() {
        return Err(Error::parse(1, "sweep table has no rows"));
    }
    Ok(rows)
}

/// Rows of one metric, in sweep order.
pub fn select(rows: &[SweepRow], metric: Metric) -> Vec<&SweepRow> {
    rows.iter().filter(|r| r.metric == metric).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(axis: Axis, values: Vec<f64>) -> SweepSpec {
        SweepSpec {
            axis,
            values,
            replicas: 3,
            base: EpisodeConfig {
                n_users: 8,
                ..EpisodeConfig::default()
            },
        }
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in Axis::ALL {
            assert_eq!(axis.name().parse::<Axis>().unwrap(), axis);
        }
        assert!("beta".parse::<Axis>().is_err());
    }

    #[test]
    fn apply_sets_the_field() {
        let base = EpisodeConfig::default();
        assert_eq!(Axis::Alpha.apply(&base, 3.0).alpha, 3.0);
        assert_eq!(Axis::D2dMax.apply(&base, 20.0).d2d_max, 20.0);
        assert_eq!(Axis::WT.apply(&base, 0.9).w_t, 0.9);
        assert_eq!(Axis::CostFraction.apply(&base, 0.3).costs.c_c, Cost::RateFraction(0.3));
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std([2.0, 4.0, 6.0].into_iter());
        assert_eq!(m, 4.0);
        assert_eq!(s, 2.0);
        assert_eq!(mean_std([5.0].into_iter()), (5.0, 0.0));
    }

    #[test]
    fn single_replica_has_zero_std() {
        let spec = SweepSpec {
            replicas: 1,
            ..small_spec(Axis::Alpha, vec![2.0])
        };
        let rows = run_sweep(&spec, 9).unwrap();
        assert!(rows.iter().all(|r| r.std == 0.0 && r.replicas == 1));
    }

    #[test]
    fn rows_follow_value_then_metric_order() {
        let rows = run_sweep(&small_spec(Axis::D2dMax, vec![20.0, 80.0]), 1).unwrap();
        assert_eq!(rows.len(), 2 * Metric::ALL.len());
        assert_eq!(rows[0].value, 20.0);
        assert_eq!(rows[0].metric, Metric::ALL[0]);
        assert_eq!(rows[Metric::ALL.len()].value, 80.0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = small_spec(Axis::Alpha, vec![1.0, 4.0]);
        assert_eq!(run_sweep(&spec, 42).unwrap(), run_sweep(&spec, 42).unwrap());
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(run_sweep(&small_spec(Axis::Alpha, vec![]), 1).is_err());
        let spec = SweepSpec {
            replicas: 0,
            ..small_spec(Axis::Alpha, vec![1.0])
        };
        assert!(run_sweep(&spec, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = run_sweep(&small_spec(Axis::WT, vec![0.3, 0.7]), 5).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# d2d-offload sweep v1\naxis,value,metric,mean,std,replicas\n"));
        assert_eq!(parse_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn header_only_table_is_an_error() {
        let text = "# d2d-offload sweep v1\naxis,value,metric,mean,std,replicas\n";
        assert!(parse_csv(text.as_bytes()).is_err());
    }
}
