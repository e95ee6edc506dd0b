//! Link model: distance path loss with Rayleigh fading, and the spectral
//! efficiency of cellular, D2D and interference-free links.
//!
//! Powers are linear milliwatts. Rates are bits/s/Hz.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Path-loss exponent η, in [2, 5].
    pub path_loss_exp: f64,
    /// eNB transmit power, dBm.
    pub p_enb: f64,
    /// UE transmit power, dBm.
    pub p_ue: f64,
    /// eNB antenna gain, dBi.
    pub gain_enb: f64,
    /// UE antenna gain, dBi.
    pub gain_ue: f64,
    /// Noise spectral density, dBm/Hz.
    pub noise_density: f64,
    /// Receiver noise figure, dB.
    pub noise_figure: f64,
    /// Hz.
    pub bandwidth: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            path_loss_exp: 4.0,
            p_enb: 46.0,
            p_ue: 23.0,
            gain_enb: 14.0,
            gain_ue: 0.0,
            noise_density: -174.0,
            noise_figure: 9.0,
            bandwidth: 10e6,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2.0..=5.0).contains(&self.path_loss_exp) {
            return Err(Error::config(format!(
                "path_loss_exp must lie in [2, 5], got {}",
                self.path_loss_exp
            )));
        }
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::config(format!("bandwidth must be > 0, got {}", self.bandwidth)));
        }
        let finite = [
            self.p_enb,
            self.p_ue,
            self.gain_enb,
            self.gain_ue,
            self.noise_density,
            self.noise_figure,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("channel powers and gains must be finite"));
        }
        Ok(())
    }

    /// Receiver noise power N0 over the configured bandwidth, mW.
    pub fn noise_mw(&self) -> f64 {
        dbm_to_linear(self.noise_density + 10.0 * self.bandwidth.log10() + self.noise_figure)
    }

    /// eNB transmit power times both antenna gains, mW.
    pub fn enb_tx_mw(&self) -> f64 {
        dbm_to_linear(self.p_enb + self.gain_enb + self.gain_ue)
    }

    /// UE transmit power times both antenna gains, mW.
    pub fn ue_tx_mw(&self) -> f64 {
        dbm_to_linear(self.p_ue + 2.0 * self.gain_ue)
    }
}

/// One realization of a link's power gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRealization {
    pub distance: f64,
    /// |h0|², unit-mean exponential.
    pub fading_power: f64,
    /// d^{−η} |h0|².
    pub gain: f64,
}

/// Draws d^{−η} |h0|² with h0 ~ CN(0, 1).
pub fn channel_gain<R: Rng + ?Sized>(distance: f64, eta: f64, rng: &mut R) -> Result<LinkRealization> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::domain(format!("link distance must be > 0, got {distance}")));
    }
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let fading_power = 0.5 * (re * re + im * im);
    let gain = distance.powf(-eta) * fading_power;
    Ok(LinkRealization {
        distance,
        fading_power,
        gain,
    })
}

/// Mean gain d^{−η} (unit fading).
pub fn mean_gain(distance: f64, eta: f64) -> f64 {
    distance.powf(-eta)
}

fn check_powers(terms: &[(&str, f64)], noise: f64) -> Result<()> {
    if !(noise > 0.0) || !noise.is_finite() {
        return Err(Error::domain(format!("noise power must be > 0, got {noise}")));
    }
    for (name, v) in terms {
        if !(*v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} power must be >= 0, got {v}")));
        }
    }
    Ok(())
}

fn spectral_efficiency(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Cellular downlink with D2D co-channel interference.
pub fn rate_cellular(signal: f64, d2d_interference: f64, noise: f64) -> Result<f64> {
    check_powers(&[("signal", signal), ("d2d interference", d2d_interference)], noise)?;
    Ok(spectral_efficiency(signal / (d2d_interference + noise)))
}

/// D2D link hearing the eNB downlink and other D2D transmitters.
pub fn rate_d2d(signal: f64, enb_interference: f64, other_d2d_interference: f64, noise: f64) -> Result<f64> {
    check_powers(
        &[
            ("signal", signal),
            ("eNB interference", enb_interference),
            ("d2d interference", other_d2d_interference),
        ],
        noise,
    )?;
    let sinr = signal / (enb_interference + other_d2d_interference + noise);
    Ok(spectral_efficiency(sinr))
}

/// Link without co-channel interference.
pub fn rate_clean(signal: f64, noise: f64) -> Result<f64> {
    check_powers(&[("signal", signal)], noise)?;
    Ok(spectral_efficiency(signal / noise))
}

pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Which transmissions share a subchannel. Cellular links and D2D pairs are
/// indexed by the caller.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterferenceTopology {
    cd: BTreeSet<(usize, usize)>,
    dd: BTreeSet<(usize, usize)>,
}

impl InterferenceTopology {
    /// Every listed cellular link and D2D pair on one shared subchannel.
    pub fn shared_subchannel(cellular: &[usize], d2d: &[usize]) -> Self {
        let mut topo = Self::default();
        for &c in cellular {
            for &d in d2d {
                topo.cd.insert((c, d));
            }
        }
        for &a in d2d {
            for &b in d2d {
                topo.set_dd(a, b);
            }
        }
        topo
    }

    pub fn set_cd(&mut self, cellular: usize, d2d: usize) {
        self.cd.insert((cellular, d2d));
    }

    /// Symmetric; self-pairs are ignored.
    pub fn set_dd(&mut self, a: usize, b: usize) {
        if a != b {
            self.dd.insert((a, b));
            self.dd.insert((b, a));
        }
    }

    /// β_cd
    pub fn cd(&self, cellular: usize, d2d: usize) -> bool {
        self.cd.contains(&(cellular, d2d))
    }

    /// β_dd'
    pub fn dd(&self, d: usize, other: usize) -> bool {
        self.dd.contains(&(d, other))
    }

    /// Σ_d β_cd · rx_power[d] at cellular receiver `c`.
    pub fn cellular_interference(&self, c: usize, rx_power: impl IntoIterator<Item = (usize, f64)>) -> f64 {
        rx_power
            .into_iter()
            .filter(|(d, _)| self.cd(c, *d))
            .map(|(_, p)| p)
            .sum()
    }

    /// Σ_{d'} β_dd' · rx_power[d'] at the receiver of pair `d`.
    pub fn d2d_interference(&self, d: usize, rx_power: impl IntoIterator<Item = (usize, f64)>) -> f64 {
        rx_power
            .into_iter()
            .filter(|(other, _)| self.dd(d, *other))
            .map(|(_, p)| p)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_gain_mc(d: f64, eta: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 100_000;
        (0..n)
            .map(|_| channel_gain(d, eta, &mut rng).unwrap().gain)
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn unit_distance_unit_mean() {
        let m = mean_gain_mc(1.0, 3.0, 1);
        assert!((m - 1.0).abs() < 0.02, "{m}");
    }

    #[test]
    fn inverse_square_at_two_meters() {
        let m = mean_gain_mc(2.0, 2.0, 2);
        assert!((m - 0.25).abs() / 0.25 < 0.02, "{m}");
        assert_eq!(mean_gain(2.0, 2.0), 0.25);
    }

    #[test]
    fn gain_is_reproducible() {
        let a = channel_gain(17.0, 3.5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = channel_gain(17.0, 3.5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert!(channel_gain(0.0, 3.0, &mut ChaCha8Rng::seed_from_u64(4)).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_cellular(1.0, 0.0, 1.0).unwrap(), 1.0);
        assert!((rate_cellular(3.0, 1.0, 1.0).unwrap() - 2.5_f64.log2()).abs() < 1e-12);
        assert!((rate_cellular(3.0, 1.0, 1.0).unwrap() - 1.3219).abs() < 1e-4);
        assert_eq!(rate_d2d(1.0, 0.0, 0.0, 1.0).unwrap(), 1.0);
        assert!((rate_d2d(9.0, 1.0, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(rate_d2d(1.0, 0.5, 0.0, 1.0).unwrap() < rate_clean(1.0, 1.0).unwrap());
        assert_eq!(rate_clean(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(rate_clean(2.5, 2.5).unwrap(), 1.0);
        assert!((rate_clean(15.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rate_errors() {
        assert!(rate_cellular(1.0, 0.0, 0.0).is_err());
        assert!(rate_clean(-1.0, 1.0).is_err());
        assert!(rate_d2d(1.0, -0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn db_conversions() {
        assert_eq!(dbm_to_linear(0.0), 1.0);
        assert!((dbm_to_linear(30.0) - 1000.0).abs() < 1e-9);
        let cfg = ChannelConfig::default();
        let expected = 10f64.powf((-174.0 + 70.0 + 9.0) / 10.0);
        assert!((cfg.noise_mw() - expected).abs() / expected < 1e-12);
        for &x in &[-174.0, -3.2, 0.0, 14.0, 46.0] {
            assert!((linear_to_dbm(dbm_to_linear(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
            assert!((linear_to_db(db_to_linear(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn topology_flags() {
        let topo = InterferenceTopology::shared_subchannel(&[0], &[0, 1, 2]);
        assert!(topo.cd(0, 2));
        assert!(topo.dd(0, 1) && topo.dd(1, 0));
        assert!(!topo.dd(1, 1));
        let rx = [(0, 1.0), (1, 2.0), (2, 4.0)];
        assert_eq!(topo.d2d_interference(1, rx), 5.0);
        assert_eq!(topo.cellular_interference(0, rx), 7.0);
        assert_eq!(InterferenceTopology::default().cellular_interference(0, rx), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(ChannelConfig::default().validate().is_ok());
        let bad = ChannelConfig {
            path_loss_exp: 1.5,
            ..ChannelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ChannelConfig {
            bandwidth: 0.0,
            ..ChannelConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
