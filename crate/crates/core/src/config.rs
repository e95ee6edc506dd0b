//! Flat TOML run configuration, overlaid on the built-in defaults.
//!
//! ```toml
//! alpha = 12
//! d2d_max = 60
//! c_c = "15%"          # fraction of the interference-free cellular rate
//! c_t = 0.2            # absolute, bits/s/Hz
//! sweep_axis = "alpha"
//! sweep_values = [2, 4, 8, 12, 16]
//! replicas = 1000
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::engine::{Cost, EpisodeConfig, UtilityForm};
use crate::error::{Error, Result};
use crate::sweep::Axis;
use crate::UserId;

/// Default replica count for `sweep`.
pub const DEFAULT_REPLICAS: u64 = 100;

/// A cost given either as a number (absolute) or a percentage string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CostValue {
    Absolute(f64),
    Text(String),
}

impl CostValue {
    fn into_cost(self, name: &str) -> Result<Cost> {
        match self {
            CostValue::Absolute(v) => Ok(Cost::Absolute(v)),
            CostValue::Text(s) => s
                .trim()
                .strip_suffix('%')
                .and_then(|p| p.trim().parse::<f64>().ok())
                .map(|p| Cost::RateFraction(p / 100.0))
                .ok_or_else(|| {
                    Error::config(format!(
                        "{name} must be a number or a percentage like \"15%\", got {s:?}"
                    ))
                }),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_users: Option<usize>,
    cell_radius: Option<f64>,
    enb_distance: Option<f64>,
    d2d_max: Option<f64>,
    alpha: Option<f64>,
    w_t: Option<f64>,
    content_bits: Option<f64>,
    seed: Option<u64>,
    utility_form: Option<String>,
    arrival_order: Option<Vec<u32>>,

    path_loss_exp: Option<f64>,
    p_enb: Option<f64>,
    p_ue: Option<f64>,
    gain_enb: Option<f64>,
    gain_ue: Option<f64>,
    noise_density: Option<f64>,
    noise_figure: Option<f64>,
    bandwidth: Option<f64>,

    c_t: Option<CostValue>,
    c_m: Option<CostValue>,
    c_c: Option<CostValue>,

    trace_encounter_rate: Option<f64>,
    trace_social_range: Option<f64>,
    trace_mean_contact: Option<f64>,
    trace_shape_min: Option<f64>,
    trace_shape_max: Option<f64>,
    trace_window: Option<f64>,

    sweep_axis: Option<String>,
    sweep_values: Option<Vec<f64>>,
    replicas: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub episode: EpisodeConfig,
    pub sweep_axis: Option<Axis>,
    pub sweep_values: Option<Vec<f64>>,
    pub replicas: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            episode: EpisodeConfig::default(),
            sweep_axis: None,
            sweep_values: None,
            replicas: DEFAULT_REPLICAS,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    let mut run = RunConfig::default();
    let ep = &mut run.episode;
    set(&mut ep.n_users, raw.n_users);
    set(&mut ep.cell_radius, raw.cell_radius);
    set(&mut ep.enb_distance, raw.enb_distance);
    set(&mut ep.d2d_max, raw.d2d_max);
    set(&mut ep.alpha, raw.alpha);
    set(&mut ep.w_t, raw.w_t);
    set(&mut ep.content_bits, raw.content_bits);
    set(&mut ep.seed, raw.seed);
    if let Some(form) = raw.utility_form {
        ep.utility_form = match form.as_str() {
            "expected" => UtilityForm::Expected,
            "realized" => UtilityForm::Realized,
            other => {
                return Err(Error::config(format!(
                    "utility_form must be expected or realized, got {other:?}"
                )))
            }
        };
    }
    if let Some(order) = raw.arrival_order {
        ep.arrival_order = Some(order.into_iter().map(UserId).collect());
    }

    let ch = &mut ep.channel;
    set(&mut ch.path_loss_exp, raw.path_loss_exp);
    set(&mut ch.p_enb, raw.p_enb);
    set(&mut ch.p_ue, raw.p_ue);
    set(&mut ch.gain_enb, raw.gain_enb);
    set(&mut ch.gain_ue, raw.gain_ue);
    set(&mut ch.noise_density, raw.noise_density);
    set(&mut ch.noise_figure, raw.noise_figure);
    set(&mut ch.bandwidth, raw.bandwidth);

    for (slot, value, name) in [
        (&mut ep.costs.c_t, raw.c_t, "c_t"),
        (&mut ep.costs.c_m, raw.c_m, "c_m"),
        (&mut ep.costs.c_c, raw.c_c, "c_c"),
    ] {
        if let Some(v) = value {
            *slot = v.into_cost(name)?;
        }
    }

    let tr = &mut ep.trace;
    set(&mut tr.encounter_rate, raw.trace_encounter_rate);
    set(&mut tr.social_range, raw.trace_social_range);
    set(&mut tr.mean_contact, raw.trace_mean_contact);
    set(&mut tr.shape_min, raw.trace_shape_min);
    set(&mut tr.shape_max, raw.trace_shape_max);
    set(&mut tr.window, raw.trace_window);

    run.sweep_axis = raw.sweep_axis.as_deref().map(str::parse).transpose()?;
    run.sweep_values = raw.sweep_values;
    set(&mut run.replicas, raw.replicas);
    run.episode.validate()?;
    Ok(run)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Every config key with its default; `[assumed]` marks free modelling
/// choices worth revisiting for a given deployment.
pub fn defaults_help() -> String {
    let d = EpisodeConfig::default();
    let ch = &d.channel;
    let tr = &d.trace;
    let cost = |c: Cost| match c {
        Cost::Absolute(v) => format!("{v}"),
        Cost::RateFraction(f) => format!("\"{}%\"", f * 100.0),
    };
    let lines = [
        format!("n_users = {}", d.n_users),
        format!("cell_radius = {} (m)", d.cell_radius),
        format!(
            "enb_distance = {} (m, eNB to user-disk centre) [assumed]",
            d.enb_distance
        ),
        format!("d2d_max = {} (m) [assumed]", d.d2d_max),
        format!("alpha = {}", d.alpha),
        format!("w_t = {} [assumed]", d.w_t),
        format!("content_bits = {} [assumed]", d.content_bits),
        format!("seed = {}", d.seed),
        "utility_form = \"expected\" (or \"realized\")".to_string(),
        "arrival_order = ascending labels".to_string(),
        format!("path_loss_exp = {} [assumed]", ch.path_loss_exp),
        format!("p_enb = {} (dBm)", ch.p_enb),
        format!("p_ue = {} (dBm)", ch.p_ue),
        format!("gain_enb = {} (dBi)", ch.gain_enb),
        format!("gain_ue = {} (dBi)", ch.gain_ue),
        format!("noise_density = {} (dBm/Hz)", ch.noise_density),
        format!("noise_figure = {} (dB)", ch.noise_figure),
        format!("bandwidth = {} (Hz) [assumed]", ch.bandwidth),
        format!("c_t = {} [assumed]", cost(d.costs.c_t)),
        format!("c_m = {} [assumed]", cost(d.costs.c_m)),
        format!("c_c = {}", cost(d.costs.c_c)),
        format!("trace_encounter_rate = {} [assumed]", tr.encounter_rate),
        format!("trace_social_range = {} (m) [assumed]", tr.social_range),
        format!("trace_mean_contact = {} (s) [assumed]", tr.mean_contact),
        format!("trace_shape_min = {} [assumed]", tr.shape_min),
        format!("trace_shape_max = {} [assumed]", tr.shape_max),
        format!("trace_window = {} (s) [assumed]", tr.window),
        "sweep_axis = alpha | d2d_max | cost_fraction | w_t".to_string(),
        "sweep_values = [..]".to_string(),
        format!("replicas = {DEFAULT_REPLICAS}"),
    ];
    let mut out = String::from("Config keys (TOML, all optional) and defaults:\n");
    for line in lines {
        out.push_str("  ");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
