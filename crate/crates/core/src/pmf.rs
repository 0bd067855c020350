//! Probability mass function of the test count.

use std::fmt;

/// Distribution of `T(N)` on `{1, ..., 2N - 1}`, stored densely by test count.
///
/// Index `t` of the weight table is the probability that exactly `t` tests
/// are used; index 0 is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    items: u64,
    weights: Vec<f64>,
}

impl Pmf {
    /// Wraps a weight table indexed by test count. Trailing zeros are trimmed.
    pub fn from_weights(items: u64, mut weights: Vec<f64>) -> Self {
        while weights.len() > 2 && weights.last() == Some(&0.0) {
            weights.pop();
        }
        Self { items, weights }
    }

    pub fn items(&self) -> u64 {
        self.items
    }

    /// Probability that exactly `t` tests are used.
    pub fn prob(&self, t: usize) -> f64 {
        self.weights.get(t).copied().unwrap_or(0.0)
    }

    /// Raw table; entry `t` is `P{T = t}`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest test count with a stored entry.
    pub fn max_support(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    /// Points of positive mass, in ascending order.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(t, w)| t as f64 * w)
            .sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(t, w)| (t * t) as f64 * w)
            .sum()
    }

    /// Central second moment, summed around the mean to avoid cancellation.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.weights
            .iter()
            .enumerate()
            .map(|(t, w)| (t as f64 - mean).powi(2) * w)
            .sum()
    }

    /// `P{T <= t}` for `t = 0..=upto`.
    pub fn cdf(&self, upto: usize) -> Vec<f64> {
        let mut acc = 0.0;
        (0..=upto)
            .map(|t| {
                acc += self.prob(t);
                acc
            })
            .collect()
    }

    /// Largest absolute per-entry difference against another PMF.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        let len = self.weights.len().max(other.weights.len());
        (0..len)
            .map(|t| (self.prob(t) - other.prob(t)).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Pmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (t, w)) in self.support().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t}: {w}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_table() {
        let pmf = Pmf::from_weights(2, vec![0.0, 0.25, 0.25, 0.5]);
        assert_eq!(pmf.mean(), 2.25);
        assert_eq!(pmf.second_moment(), 5.75);
        assert!((pmf.variance() - 0.6875).abs() < 1e-15);
        assert_eq!(pmf.cdf(3), vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!(pmf.to_string(), "{1: 0.25, 2: 0.25, 3: 0.5}");
    }

    #[test]
    fn trims_trailing_zeros() {
        let pmf = Pmf::from_weights(3, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(pmf.max_support(), 1);
        assert_eq!(pmf.prob(5), 0.0);
    }
}
