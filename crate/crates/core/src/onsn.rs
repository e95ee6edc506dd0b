//! Indian Buffet Process content demand.
//!
//! The n-th user re-selects each previously chosen content k independently
//! with probability m_k/n and adds Poisson(α/n) contents nobody has chosen
//! yet. Fresh contents get ids from a counter and are never recycled.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentId(pub u64);

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Prior over content popularity after `n_seen` users.
#[derive(Debug, Clone, PartialEq)]
pub struct IbpState {
    alpha: f64,
    n_seen: u64,
    counts: BTreeMap<ContentId, u64>,
    next_content_id: u64,
}

/// One user's draw.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Selection {
    pub old_contents: BTreeSet<ContentId>,
    pub n_new: u64,
}

impl Selection {
    /// m_n: everything the user selected.
    pub fn total(&self) -> u64 {
        self.old_contents.len() as u64 + self.n_new
    }
}

impl IbpState {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("IBP concentration must be > 0, got {alpha}")));
        }
        Ok(Self {
            alpha,
            n_seen: 0,
            counts: BTreeMap::new(),
            next_content_id: 0,
        })
    }

    /// A state with given popularity counts, e.g. a restored snapshot.
    pub fn with_counts(alpha: f64, n_seen: u64, counts: BTreeMap<ContentId, u64>) -> Result<Self> {
        let mut state = Self::new(alpha)?;
        for (k, &m) in &counts {
            if m == 0 || m > n_seen {
                return Err(Error::domain(format!(
                    "count {m} for content {k} must lie in 1..={n_seen}"
                )));
            }
        }
        state.n_seen = n_seen;
        state.next_content_id = counts.keys().last().map_or(0, |k| k.0 + 1);
        state.counts = counts;
        Ok(state)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    pub fn counts(&self) -> &BTreeMap<ContentId, u64> {
        &self.counts
    }

    pub fn next_content_id(&self) -> u64 {
        self.next_content_id
    }

    /// Distinct contents chosen so far.
    pub fn library_size(&self) -> usize {
        self.counts.len()
    }

    /// Σ_k m_k / n for the next user n = n_seen + 1: the expected number of
    /// old contents that user will re-select.
    pub fn expected_old_count(&self) -> f64 {
        let n = (self.n_seen + 1) as f64;
        self.counts.values().map(|&m| m as f64 / n).sum()
    }

    /// Applies `selection` in place and returns the ids given to its new contents.
    pub fn absorb(&mut self, selection: &Selection) -> Result<Vec<ContentId>> {
        if let Some(k) = selection.old_contents.iter().find(|k| !self.counts.contains_key(k)) {
            return Err(Error::UnknownContent(k.0));
        }
        self.n_seen += 1;
        for k in &selection.old_contents {
            *self.counts.get_mut(k).expect("checked above") += 1;
        }
        let fresh: Vec<ContentId> = (0..selection.n_new)
            .map(|i| ContentId(self.next_content_id + i))
            .collect();
        for k in &fresh {
            self.counts.insert(*k, 1);
        }
        self.next_content_id += selection.n_new;
        Ok(fresh)
    }

    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "content_id,m_k")?;
        for (k, m) in &self.counts {
            writeln!(out, "{k},{m}")?;
        }
        Ok(())
    }
}

/// Draws the next user's selection without touching `state`.
pub fn ibp_select<R: Rng + ?Sized>(state: &IbpState, rng: &mut R) -> Selection {
    let n = (state.n_seen + 1) as f64;
    let old_contents = state
        .counts
        .iter()
        .filter(|(_, &m)| rng.random::<f64>() < m as f64 / n)
        .map(|(k, _)| *k)
        .collect();
    let rate = state.alpha / n;
    // alpha > 0 and finite is a state invariant, so the rate is valid.
    let n_new = Poisson::new(rate).map_or(0, |p| p.sample(rng) as u64);
    Selection { old_contents, n_new }
}

/// Posterior after `selection`: the functional form of [`IbpState::absorb`].
pub fn update_prior(state: &IbpState, selection: &Selection) -> Result<IbpState> {
    let mut next = state.clone();
    next.absorb(selection)?;
    Ok(next)
}

/// α · H_N, the expected number of distinct contents after N users.
pub fn expected_library_size(alpha: f64, n_users: u64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() || n_users == 0 {
        return Err(Error::domain(format!(
            "need alpha > 0 and n_users >= 1, got {alpha}, {n_users}"
        )));
    }
    let harmonic: f64 = (1..=n_users).map(|n| 1.0 / n as f64).sum();
    Ok(alpha * harmonic)
}
