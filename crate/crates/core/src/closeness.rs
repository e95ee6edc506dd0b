//! Gamma contact-duration law and the closeness weight.
//!
//! The closeness of a pair is the probability that one contact lasts at least
//! the time needed to deliver a content, w = 1 − P(k, X_min/θ), where the
//! Gamma(k, θ) law is moment-matched to the pair's contact statistics.

use crate::error::{Error, Result};
use crate::special::reg_upper_gamma;
use crate::trace::ContactStats;

/// Shape k and scale θ (seconds) of a Gamma contact-duration law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    shape: f64,
    scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!(
                "gamma parameters must be finite and positive, got k={shape}, theta={scale}"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }
}

/// Fitted contact-duration law of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactLaw {
    Gamma(GammaParams),
    /// Zero observed variance: every contact lasts exactly this many seconds.
    Degenerate(f64),
}

/// Probability in [0, 1] that a contact is long enough for one transfer.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Closeness(f64);

impl Closeness {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("closeness must lie in [0, 1], got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Moment-matched fit: k = M²/I, θ = I/M; a point mass at M when I = 0.
pub fn fit_gamma(stats: &ContactStats) -> Result<ContactLaw> {
    let m = stats.mean_duration;
    let i = stats.irregularity;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::domain(format!("mean contact duration must be > 0, got {m}")));
    }
    if !(i >= 0.0) || !i.is_finite() {
        return Err(Error::domain(format!("irregularity must be >= 0, got {i}")));
    }
    if i == 0.0 {
        return Ok(ContactLaw::Degenerate(m));
    }
    GammaParams::new(m * m / i, i / m).map(ContactLaw::Gamma)
}

/// Closeness for a required contact time `x_min` (seconds).
///
/// `x_min` may be `+∞` (an unusable link), which yields 0.
pub fn closeness(law: &ContactLaw, x_min: f64) -> Result<Closeness> {
    if !(x_min >= 0.0) {
        return Err(Error::domain(format!("x_min must be >= 0, got {x_min}")));
    }
    let w = match law {
        ContactLaw::Gamma(g) => reg_upper_gamma(g.shape, x_min / g.scale)?,
        ContactLaw::Degenerate(m) => {
            if *m >= x_min {
                1.0
            } else {
                0.0
            }
        }
    };
    Closeness::new(w.clamp(0.0, 1.0))
}

/// Time needed to push `content_bits` through a link of `link_rate` bits/s.
pub fn min_contact_time(content_bits: f64, link_rate: f64) -> Result<f64> {
    if !(content_bits > 0.0) || !(link_rate > 0.0) {
        return Err(Error::domain(format!(
            "content size and link rate must be > 0, got {content_bits} bits at {link_rate} bit/s"
        )));
    }
    Ok(content_bits / link_rate)
}
