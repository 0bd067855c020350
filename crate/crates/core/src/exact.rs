//! Exact distribution of the test count for any population size.
//!
//! Write `U(m)` for the tests spent on an UNKNOWN group of `m` items and
//! `P(m)` for a group of `m` items known to be positive. With `L = floor(m/2)`,
//! `R = ceil(m/2)` and the lazy scheme:
//!
//! ```text
//! U(m) = 1 + [group dirty] * P(m)
//! P(1) = 0
//! P(m) = 1 + P(R)              w.p. q^L (1 - q^R) / (1 - q^m)   (left clean)
//!          + P(L) + U(R)       w.p. (1 - q^L) / (1 - q^m)       (left dirty)
//! ```
//!
//! where, in the second branch, `P(L)` and `U(R)` are independent. In PGF
//! form this is
//!
//! ```text
//! gU(z; m) = q^m z + (1 - q^m) z gP(z; m)
//! gP(z; m) = z [ q^L (1 - q^R) gP(z; R) + (1 - q^L) gP(z; L) gU(z; R) ] / (1 - q^m)
//! ```
//!
//! Means and variances are carried through the same recursion as mixture
//! moments (mean of the mixture, within-branch variance plus between-branch
//! spread), which is the second derivative of the PGF recursion at `z = 1`
//! rearranged into a sum of nonnegative terms. Every size reached from `N` by
//! repeated floor/ceil halving is visited once; there are at most two distinct
//! sizes per level.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::prob::Prevalence;
use crate::scheme::SchemeVariant;

/// Largest population for [`pmf_exact`].
pub const MAX_PMF_ITEMS: u64 = 4096;

/// Exact first two moments of `T(N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub n: u64,
    pub q: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `mean - 1`, computed without cancellation.
    pub mean_excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Moments {
    mean: f64,
    var: f64,
}

/// Memoized recursions for one prevalence and one scheme variant.
///
/// The memo is keyed by group size only; it is not shared across threads.
#[derive(Debug, Clone)]
pub struct ExactAnalyzer {
    prev: Prevalence,
    variant: SchemeVariant,
    positive: HashMap<u64, Moments>,
}

impl ExactAnalyzer {
    pub fn new(prev: Prevalence) -> Self {
        Self::with_variant(prev, SchemeVariant::PaperLazy)
    }

    pub fn with_variant(prev: Prevalence, variant: SchemeVariant) -> Self {
        Self { prev, variant, positive: HashMap::new() }
    }

    pub fn prevalence(&self) -> Prevalence {
        self.prev
    }

    /// Branch weights `(left clean, left dirty)` for a positive group of size `m`.
    fn branch_weights(&self, m: u64) -> (f64, f64) {
        let (l, r) = (m / 2, m - m / 2);
        let dirty = self.prev.dirty(m);
        let left_clean = self.prev.clean(l) * self.prev.dirty(r) / dirty;
        let left_dirty = self.prev.dirty(l) / dirty;
        (left_clean, left_dirty)
    }

    fn positive_moments(&mut self, m: u64) -> Moments {
        if m == 1 {
            return Moments { mean: 0.0, var: 0.0 };
        }
        if let Some(&hit) = self.positive.get(&m) {
            return hit;
        }
        let (l, r) = (m / 2, m - m / 2);
        let (w_clean, w_dirty) = self.branch_weights(m);
        let pos_r = self.positive_moments(r);
        let pos_l = self.positive_moments(l);
        let unk_r = self.unknown_moments(r);

        let (clean_mean, clean_var) = match self.variant {
            SchemeVariant::PaperLazy => (pos_r.mean, pos_r.var),
            // The right half is tested and necessarily positive.
            SchemeVariant::NaiveBothHalves => (1.0 + pos_r.mean, pos_r.var),
        };
        let dirty_mean = pos_l.mean + 1.0 + unk_r.mean;
        let dirty_var = pos_l.var + unk_r.var;

        let gap = clean_mean - dirty_mean;
        let out = Moments {
            mean: 1.0 + w_clean * clean_mean + w_dirty * dirty_mean,
            var: w_clean * clean_var + w_dirty * dirty_var + w_clean * w_dirty * gap * gap,
        };
        self.positive.insert(m, out);
        out
    }

    /// Moments of `U(m) - 1`.
    fn unknown_moments(&mut self, m: u64) -> Moments {
        let r = self.prev.dirty(m);
        if r == 0.0 {
            return Moments { mean: 0.0, var: 0.0 };
        }
        let pos = self.positive_moments(m);
        Moments {
            mean: r * pos.mean,
            var: r * pos.var + r * (1.0 - r) * pos.mean * pos.mean,
        }
    }

    /// Mean, variance and second moment of `T(n)`.
    pub fn moments(&mut self, n: u64) -> Result<MomentSummary> {
        check_items(n)?;
        let excess = self.unknown_moments(n);
        let mean = 1.0 + excess.mean;
        Ok(MomentSummary {
            n,
            q: self.prev.q(),
            mean,
            second_moment: excess.var + mean * mean,
            variance: excess.var,
            mean_excess: excess.mean,
        })
    }

    /// `E[z^T(n)]`.
    pub fn pgf(&self, n: u64, z: f64) -> Result<f64> {
        check_items(n)?;
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("z = {z} must be finite and nonnegative")));
        }
        let mut memo = HashMap::new();
        Ok(self.pgf_unknown(n, z, &mut memo))
    }

    fn pgf_unknown(&self, m: u64, z: f64, memo: &mut HashMap<u64, f64>) -> f64 {
        let r = self.prev.dirty(m);
        if r == 0.0 {
            return z;
        }
        self.prev.clean(m) * z + r * z * self.pgf_positive(m, z, memo)
    }

    fn pgf_positive(&self, m: u64, z: f64, memo: &mut HashMap<u64, f64>) -> f64 {
        if m == 1 {
            return 1.0;
        }
        if let Some(&hit) = memo.get(&m) {
            return hit;
        }
        let (l, r) = (m / 2, m - m / 2);
        let (w_clean, w_dirty) = self.branch_weights(m);
        let pos_r = self.pgf_positive(r, z, memo);
        let clean_branch = match self.variant {
            SchemeVariant::PaperLazy => pos_r,
            SchemeVariant::NaiveBothHalves => z * pos_r,
        };
        let dirty_branch = self.pgf_positive(l, z, memo) * self.pgf_unknown(r, z, memo);
        let out = z * (w_clean * clean_branch + w_dirty * dirty_branch);
        memo.insert(m, out);
        out
    }

    /// Full PMF of `T(n)` from the PGF recursion on coefficient sequences.
    pub fn pmf(&self, n: u64) -> Result<Pmf> {
        check_items(n)?;
        if n > MAX_PMF_ITEMS {
            return Err(Error::ResourceLimit(format!(
                "exact PMF supports N <= {MAX_PMF_ITEMS}, got {n}"
            )));
        }
        let mut memo = HashMap::new();
        let weights = self.poly_unknown(n, &mut memo);
        Ok(Pmf::from_weights(n, weights))
    }

    fn poly_unknown(&self, m: u64, memo: &mut HashMap<u64, Vec<f64>>) -> Vec<f64> {
        let r = self.prev.dirty(m);
        if r == 0.0 {
            return vec![0.0, 1.0];
        }
        let pos = self.poly_positive(m, memo);
        let mut out = vec![0.0; pos.len() + 1];
        out[1] = self.prev.clean(m);
        for (k, c) in pos.iter().enumerate() {
            out[k + 1] += r * c;
        }
        out
    }

    fn poly_positive(&self, m: u64, memo: &mut HashMap<u64, Vec<f64>>) -> Vec<f64> {
        if m == 1 {
            return vec![1.0];
        }
        if let Some(hit) = memo.get(&m) {
            return hit.clone();
        }
        let (l, r) = (m / 2, m - m / 2);
        let (w_clean, w_dirty) = self.branch_weights(m);
        let pos_r = self.poly_positive(r, memo);
        let shift = match self.variant {
            SchemeVariant::PaperLazy => 0,
            SchemeVariant::NaiveBothHalves => 1,
        };
        let dirty_branch = convolve(&self.poly_positive(l, memo), &self.poly_unknown(r, memo));
        let len = 1 + dirty_branch.len().max(pos_r.len() + shift);
        let mut out = vec![0.0; len];
        for (k, c) in pos_r.iter().enumerate() {
            out[k + shift + 1] += w_clean * c;
        }
        for (k, c) in dirty_branch.iter().enumerate() {
            out[k + 1] += w_dirty * c;
        }
        memo.insert(m, out.clone());
        out
    }
}

/// Coefficients of the product polynomial, each accumulated in ascending
/// index of the left factor.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn check_items(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("population size must be at least 1".into()));
    }
    Ok(())
}

/// `E[T(n)]` for the lazy scheme at clean probability `q`.
pub fn mean_exact(n: u64, q: f64) -> Result<f64> {
    Ok(variance_exact(n, q)?.mean)
}

/// Mean, second moment and variance of `T(n)` for the lazy scheme.
pub fn variance_exact(n: u64, q: f64) -> Result<MomentSummary> {
    ExactAnalyzer::new(Prevalence::from_q(q)?).moments(n)
}

/// `E[z^T(n)]` for the lazy scheme.
pub fn pgf_eval(n: u64, q: f64, z: f64) -> Result<f64> {
    ExactAnalyzer::new(Prevalence::from_q(q)?).pgf(n, z)
}

/// PMF of `T(n)` for the lazy scheme, `n <= 4096`.
pub fn pmf_exact(n: u64, q: f64) -> Result<Pmf> {
    ExactAnalyzer::new(Prevalence::from_q(q)?).pmf(n)
}
