//! Encounter histories and their per-pair contact statistics.
//!
//! The trace CSV format is `user_a,user_b,start_s,duration_s`, one record per
//! line, LF or CRLF line endings, optional header row.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::{UserId, UserPair};

/// One meeting between two users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncounterRecord {
    pub user_a: UserId,
    pub user_b: UserId,
    /// Seconds since the start of the observation window.
    pub start: f64,
    /// Contact duration in seconds.
    pub duration: f64,
}

impl EncounterRecord {
    pub fn new(user_a: UserId, user_b: UserId, start: f64, duration: f64) -> Result<Self> {
        if user_a == user_b {
            return Err(Error::domain(format!("self-loop encounter for user {user_a}")));
        }
        if !(start >= 0.0) || !start.is_finite() {
            return Err(Error::domain(format!("encounter start must be >= 0, got {start}")));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::domain(format!("encounter duration must be > 0, got {duration}")));
        }
        Ok(Self {
            user_a,
            user_b,
            start,
            duration,
        })
    }

    pub fn pair(&self) -> UserPair {
        UserPair::new(self.user_a, self.user_b)
    }
}

/// Aggregated contact statistics for one unordered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactStats {
    pub pair: UserPair,
    pub n_encounters: u64,
    /// Mean contact duration M (seconds).
    pub mean_duration: f64,
    /// Population variance I of the contact durations (seconds²).
    pub irregularity: f64,
}

/// Reads trace records in file order.
///
/// A first line whose first field is not numeric is treated as a header.
/// Blank lines are skipped.
pub fn parse_trace<R: BufRead>(source: R) -> Result<Vec<EncounterRecord>> {
    let mut records = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let user_a = parse_user(fields[0], lineno)?;
        let user_b = parse_user(fields[1], lineno)?;
        let start = parse_num(fields[2], "start_s", lineno)?;
        let duration = parse_num(fields[3], "duration_s", lineno)?;
        let record =
            EncounterRecord::new(user_a, user_b, start, duration).map_err(|e| Error::parse(lineno, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

fn parse_user(field: &str, line: usize) -> Result<UserId> {
    field
        .parse::<u32>()
        .map(UserId)
        .map_err(|_| Error::parse(line, format!("invalid user id {field:?}")))
}

fn parse_num(field: &str, name: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("non-numeric {name} {field:?}")))
}

pub fn write_trace<W: Write>(records: &[EncounterRecord], mut out: W) -> Result<()> {
    writeln!(out, "user_a,user_b,start_s,duration_s")?;
    for r in records {
        writeln!(out, "{},{},{},{}", r.user_a, r.user_b, r.start, r.duration)?;
    }
    Ok(())
}

/// Reduces encounters to per-pair mean and population variance.
///
/// Sums are accumulated in a canonical (sorted) order so the result does not
/// depend on record order, bit for bit.
pub fn contact_stats(records: &[EncounterRecord]) -> BTreeMap<UserPair, ContactStats> {
    let mut by_pair: BTreeMap<UserPair, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_pair.entry(r.pair()).or_default().push(r.duration);
    }
    by_pair
        .into_iter()
        .map(|(pair, mut durations)| {
            durations.sort_by(f64::total_cmp);
            let n = durations.len() as f64;
            let mean = durations.iter().sum::<f64>() / n;
            let irregularity = durations.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let stats = ContactStats {
                pair,
                n_encounters: durations.len() as u64,
                mean_duration: mean,
                irregularity,
            };
            (pair, stats)
        })
        .collect()
}

/// Parameters for synthetic encounter histories.
///
/// Each pair at distance d meets Poisson(`encounter_rate` · e^{−d/`social_range`})
/// times over the window. Contact durations for the pair follow a Gamma law
/// with shape drawn uniformly from [`shape_min`, `shape_max`] and mean
/// `mean_contact` · e^{−d/`social_range`}.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSynthesis {
    pub encounter_rate: f64,
    pub social_range: f64,
    pub mean_contact: f64,
    pub shape_min: f64,
    pub shape_max: f64,
    pub window: f64,
}

impl Default for TraceSynthesis {
    fn default() -> Self {
        Self {
            encounter_rate: 20.0,
            social_range: 30.0,
            mean_contact: 30.0,
            shape_min: 1.5,
            shape_max: 6.0,
            window: 86_400.0,
        }
    }
}

impl TraceSynthesis {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trace_encounter_rate", self.encounter_rate),
            ("trace_social_range", self.social_range),
            ("trace_mean_contact", self.mean_contact),
            ("trace_shape_min", self.shape_min),
            ("trace_window", self.window),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.shape_max >= self.shape_min) || !self.shape_max.is_finite() {
            return Err(Error::config("trace_shape_max must be >= trace_shape_min"));
        }
        Ok(())
    }
}

/// Draws `count` Gamma(shape, scale) contact durations.
pub fn draw_durations<R: Rng + ?Sized>(shape: f64, scale: f64, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    let law = Gamma::new(shape, scale).map_err(|e| Error::domain(format!("gamma({shape}, {scale}): {e}")))?;
    Ok((0..count).map(|_| law.sample(rng).max(f64::MIN_POSITIVE)).collect())
}

/// Generates an encounter history for users placed at `positions`.
///
/// Records are sorted by pair, then by start time.
pub fn synthesize_trace<R: Rng + ?Sized>(
    positions: &BTreeMap<UserId, Point>,
    params: &TraceSynthesis,
    rng: &mut R,
) -> Result<Vec<EncounterRecord>> {
    if positions.len() < 2 {
        return Err(Error::domain(format!(
            "trace synthesis needs at least 2 users, got {}",
            positions.len()
        )));
    }
    params.validate()?;
    let users: Vec<(UserId, Point)> = positions.iter().map(|(u, p)| (*u, *p)).collect();
    let mut records = Vec::new();
    for (i, &(a, pa)) in users.iter().enumerate() {
        for &(b, pb) in &users[i + 1..] {
            let affinity = (-pa.distance(pb) / params.social_range).exp();
            let rate = params.encounter_rate * affinity;
            let count = if rate > 0.0 {
                Poisson::new(rate)
                    .map_err(|e| Error::domain(format!("poisson({rate}): {e}")))?
                    .sample(rng) as usize
            } else {
                0
            };
            if count == 0 {
                continue;
            }
            let shape = if params.shape_max > params.shape_min {
                rng.random_range(params.shape_min..params.shape_max)
            } else {
                params.shape_min
            };
            let mean = params.mean_contact * affinity;
            let durations = draw_durations(shape, mean / shape, count, rng)?;
            let mut starts: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * params.window).collect();
            starts.sort_by(f64::total_cmp);
            for (start, duration) in starts.into_iter().zip(durations) {
                records.push(EncounterRecord::new(a, b, start, duration)?);
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rec(a: u32, b: u32, d: f64) -> EncounterRecord {
        EncounterRecord::new(UserId(a), UserId(b), 0.0, d).unwrap()
    }

    #[test]
    fn parses_two_records() {
        let recs = parse_trace("1,2,0,5.0\n1,2,100,3.0".as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].pair(), UserPair::new(UserId(1), UserId(2)));
        assert_eq!(recs[0].duration, 5.0);
        assert_eq!(recs[1].duration, 3.0);
        assert_eq!(recs[1].start, 100.0);
    }

    #[test]
    fn header_and_crlf() {
        let src = "user_a,user_b,start_s,duration_s\r\n3,4,1.5,2\r\n";
        let recs = parse_trace(src.as_bytes()).unwrap();
        assert_eq!(
            recs,
            vec![EncounterRecord::new(UserId(3), UserId(4), 1.5, 2.0).unwrap()]
        );
    }

    #[test]
    fn self_loop_is_rejected_with_line_number() {
        let err = parse_trace("1,2,0,1\n1,1,0,5.0".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("self-loop"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_fields() {
        assert!(matches!(
            parse_trace("1,2,0,abc".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("1,2,0,-3".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("1,2,0,1\n1,2,3".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_input() {
        assert!(parse_trace("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn stats_arithmetic() {
        let stats = contact_stats(&[rec(1, 2, 2.0), rec(2, 1, 4.0), rec(1, 2, 6.0)]);
        let s = stats[&UserPair::new(UserId(1), UserId(2))];
        assert_eq!(s.n_encounters, 3);
        assert_eq!(s.mean_duration, 4.0);
        assert!((s.irregularity - 8.0 / 3.0).abs() < 1e-15);

        let single = contact_stats(&[rec(5, 6, 5.0)]);
        let s = single.values().next().unwrap();
        assert_eq!((s.n_encounters, s.mean_duration, s.irregularity), (1, 5.0, 0.0));

        let flat = contact_stats(&[rec(1, 2, 7.25), rec(1, 2, 7.25), rec(1, 2, 7.25)]);
        assert_eq!(flat.values().next().unwrap().irregularity, 0.0);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let positions: BTreeMap<UserId, Point> =
            [(UserId(0), Point::new(0.0, 0.0)), (UserId(1), Point::new(3.0, 4.0))].into();
        let params = TraceSynthesis::default();
        let a = synthesize_trace(&positions, &params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = synthesize_trace(&positions, &params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn synthesis_needs_two_users() {
        let positions: BTreeMap<UserId, Point> = [(UserId(0), Point::new(0.0, 0.0))].into();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(synthesize_trace(&positions, &TraceSynthesis::default(), &mut rng).is_err());
    }

    #[test]
    fn gamma_duration_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let xs = draw_durations(4.0, 2.5, 100_000, &mut rng).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 10.0).abs() / 10.0 < 0.01, "mean={mean}");
    }

    #[test]
    fn write_then_parse() {
        let recs = vec![rec(1, 2, 0.125), rec(3, 9, 41.0)];
        let mut buf = Vec::new();
        write_trace(&recs, &mut buf).unwrap();
        assert_eq!(parse_trace(buf.as_slice()).unwrap(), recs);
    }
}
