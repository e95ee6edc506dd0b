//! Simulator for socially-aware device-to-device (D2D) traffic offloading in
//! a single cellular cell.
//!
//! An episode runs three stages:
//!
//! 1. **Offline social network.** Encounter histories are reduced to per-pair
//!    contact statistics ([`trace`]), fitted to a Gamma contact-duration law
//!    and turned into a closeness weight, the probability that a contact
//!    lasts long enough to deliver one content ([`closeness`]). Thresholding
//!    the closeness graph splits users into offline social networks and
//!    white-area users ([`offsn`]).
//! 2. **Online demand.** Each offline network keeps an Indian Buffet Process
//!    over an unbounded content catalog ([`onsn`]).
//! 3. **Service.** Old contents are fetched over D2D. Each one goes to the
//!    in-range holder that adds the most expected deliveries once the other
//!    concurrent transfers' interference is counted, or to the eNB when no
//!    holder helps. New contents and failed transfers go through the eNB. Rates come from the link model in [`phy`], utilities and
//!    offloaded traffic from [`engine`].
//!
//! [`sweep`] replicates episodes over a parameter axis and writes CSV and SVG
//! results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closeness;
pub mod config;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod offsn;
pub mod onsn;
pub mod phy;
pub mod plot;
pub mod special;
pub mod sweep;
pub mod trace;

use std::fmt;

pub use error::{Error, Result};

/// User label. Users are served in ascending label order unless an explicit
/// arrival order is configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Unordered pair of distinct users, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserPair {
    lo: UserId,
    hi: UserId,
}

impl UserPair {
    pub fn new(a: UserId, b: UserId) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn lo(&self) -> UserId {
        self.lo
    }

    pub fn hi(&self) -> UserId {
        self.hi
    }

    /// The other end of the pair, if `user` is one of its ends.
    pub fn other(&self, user: UserId) -> Option<UserId> {
        if user == self.lo {
            Some(self.hi)
        } else if user == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for UserPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}
