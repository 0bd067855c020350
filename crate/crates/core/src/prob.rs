//! Per-item contamination probability and powers of the clean probability.
//!
//! Group-level probabilities are `q^m` (a group of `m` items is clean) and its
//! complement `1 - q^m`. In the shrinking-prevalence regimes `p` can be as
//! small as `1e-24`, where `1 - (1 - p)^m` computed naively is pure rounding
//! noise, so both are evaluated as `exp(m * ln q)` and `-expm1(m * ln q)` with
//! `ln q` taken from `ln1p(-p)` whenever `p` is the small side.

use crate::error::{Error, Result};

/// Contamination probability `p` and its complement `q = 1 - p`.
///
/// Both are stored so that whichever was supplied by the caller is kept
/// exactly; the other is derived once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prevalence {
    p: f64,
    q: f64,
    ln_q: f64,
}

impl Prevalence {
    /// Builds from the clean probability `q`.
    pub fn from_q(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("q = {q} is outside [0, 1]")));
        }
        Ok(Self::build(1.0 - q, q))
    }

    /// Builds from the contamination probability `p`.
    pub fn from_p(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("p = {p} is outside [0, 1]")));
        }
        Ok(Self::build(p, 1.0 - p))
    }

    fn build(p: f64, q: f64) -> Self {
        let ln_q = if p <= 0.5 { (-p).ln_1p() } else { q.ln() };
        Self { p, q, ln_q }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `q^m`, the probability that a group of `m` items is clean.
    pub fn clean(&self, m: u64) -> f64 {
        if m == 0 {
            return 1.0;
        }
        (m as f64 * self.ln_q).exp()
    }

    /// `1 - q^m`, the probability that a group of `m` items holds at least
    /// one contaminated item.
    pub fn dirty(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        -(m as f64 * self.ln_q).exp_m1()
    }

    /// `q^x` for a real exponent, with the same near-one treatment.
    pub fn clean_pow(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 1.0;
        }
        (x * self.ln_q).exp()
    }

    /// `1 - q^x` for a real exponent.
    pub fn dirty_pow(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        -(x * self.ln_q).exp_m1()
    }
}
