//! Closed forms for the mean and variance of `W_n = T(2^n)`.
//!
//! Each formula is evaluated with its powers `q^(2^k)` rewritten through the
//! complements `c(m) = 1 - q^m` (see [`Prevalence::dirty`]), so that the
//! large `2^(n+1)` terms cancel algebraically instead of numerically. The
//! mean is produced by two independent rearrangements and the variance by two
//! independent decompositions; the pairs must agree.

use crate::error::{Error, Result};
use crate::prob::Prevalence;

/// Largest exponent accepted; `2^(n+1)` must fit in a `u64`.
pub const MAX_EXPONENT: u32 = 60;

/// The mean of `T(2^n)` by two equivalent expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowTwoMean {
    pub n: u32,
    /// `2^(n+1) - 1 - 2^n sum_{k=1..n} (q^(2^k) + q^(2^(k-1))) / 2^k`.
    pub sum_form: f64,
    /// `3 2^(n-1) (1 - sum_{k=1..n-1} q^(2^k)/2^k) + 2^(n-1) p - q^(2^n) - 1`;
    /// only valid for `n >= 1`.
    pub split_form: Option<f64>,
}

impl PowTwoMean {
    pub fn value(&self) -> f64 {
        self.sum_form
    }

    /// Relative gap between the two forms (zero when only one applies).
    pub fn relative_gap(&self) -> f64 {
        match self.split_form {
            Some(s) => relative_gap(self.sum_form, s),
            None => 0.0,
        }
    }
}

/// The variance of `T(2^n)` as `V1 + V2` and as `V3 + V4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceParts {
    pub n: u32,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
}

impl VarianceParts {
    /// `V3 + V4`; this pairing has no large cancelling terms.
    pub fn variance(&self) -> f64 {
        self.v3 + self.v4
    }

    pub fn first_decomposition(&self) -> f64 {
        self.v1 + self.v2
    }

    pub fn relative_gap(&self) -> f64 {
        relative_gap(self.first_decomposition(), self.variance())
    }
}

pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn check(n: u32, q: f64) -> Result<Prevalence> {
    if n > MAX_EXPONENT {
        return Err(Error::Domain(format!("exponent n = {n} exceeds {MAX_EXPONENT}")));
    }
    Prevalence::from_q(q)
}

/// `2^e` for a possibly negative integer exponent.
fn pow2(e: i64) -> f64 {
    2f64.powi(e as i32)
}

/// Closed-form mean of `T(2^n)`.
pub fn mean_closed_form_pow2(n: u32, q: f64) -> Result<PowTwoMean> {
    mean_closed_form_pow2_with(n, check(n, q)?)
}

/// As [`mean_closed_form_pow2`] for an already-built prevalence.
pub fn mean_closed_form_pow2_with(n: u32, prev: Prevalence) -> Result<PowTwoMean> {
    if n > MAX_EXPONENT {
        return Err(Error::Domain(format!("exponent n = {n} exceeds {MAX_EXPONENT}")));
    }
    let c = |k: u32| prev.dirty(1u64 << k);
    let n_i = n as i64;

    // 2^(n+1) - 1 - 2^n sum 2^-k (2 - c_k - c_{k-1}) with sum 2^(1-k) = 2 - 2^(1-n).
    let sum_form = 1.0
        + (1..=n)
            .map(|k| pow2(n_i - k as i64) * (c(k) + c(k - 1)))
            .sum::<f64>();

    // 1 - sum_{k=1}^{n-1} q^(2^k)/2^k = 2^(1-n) + sum c_k / 2^k.
    let split_form = (n >= 1).then(|| {
        let tail: f64 = (1..n).map(|k| pow2(n_i - 1 - k as i64) * c(k)).sum();
        1.0 + 3.0 * tail + pow2(n_i - 1) * prev.p() + c(n)
    });

    Ok(PowTwoMean { n, sum_form, split_form })
}

/// Closed-form variance of `T(2^n)` with both decompositions.
pub fn variance_closed_form_pow2(n: u32, q: f64) -> Result<VarianceParts> {
    variance_closed_form_pow2_with(n, check(n, q)?)
}

/// As [`variance_closed_form_pow2`] for an already-built prevalence.
pub fn variance_closed_form_pow2_with(n: u32, prev: Prevalence) -> Result<VarianceParts> {
    if n > MAX_EXPONENT {
        return Err(Error::Domain(format!("exponent n = {n} exceeds {MAX_EXPONENT}")));
    }
    let clean = |m: u64| prev.clean(m);
    let dirty = |m: u64| prev.dirty(m);
    let big = |k: u32| clean(1u64 << k);
    let n_i = n as i64;

    let mut v1 = 0.0;
    let mut v2 = 0.0;
    let mut v3 = 0.0;
    let mut v4 = 0.0;
    // Running sums over j <= k.
    let mut inner_direct = 0.0;
    let mut inner_complement = 0.0;
    for k in 1..=n {
        let scale = pow2(n_i - k as i64);
        let weight = 2.0 * big(k) + big(k - 1);
        let three_halves = clean(3u64 << (k - 1));

        inner_direct += (big(k) + big(k - 1)) / pow2(k as i64);
        inner_complement += (dirty(1u64 << k) + dirty(1u64 << (k - 1))) / pow2(k as i64);

        v1 += weight * (2.0 - inner_direct);
        v2 += scale * (big(k + 1) + three_halves - 5.0 * big(k) - 3.0 * big(k - 1));
        v3 += weight * inner_complement;
        v4 += scale
            * ((dirty(1u64 << k) + dirty(1u64 << (k - 1)))
                - (dirty(1u64 << (k + 1)) + dirty(3u64 << (k - 1))));
    }
    let full = pow2(n_i);
    Ok(VarianceParts { n, v1: full * v1, v2, v3: full * v3, v4 })
}
