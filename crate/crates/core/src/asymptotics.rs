//! Large-`N` behaviour of `T(N)` when the prevalence shrinks as `a N^-beta`.
//!
//! Leading-order laws, with `log2 N` written `n`:
//!
//! | regime     | `E[T(N)]`                                  | `V[T(N)]`                    |
//! |------------|--------------------------------------------|------------------------------|
//! | `beta = 1` | `(3a/2) n`                                 | `(9a/4) n^2`                 |
//! | `beta > 1` | `1 + (3a/2) n N^(1-beta)`                  | `(9a/4) n^2 N^(1-beta)`      |
//! | `beta < 1` | at most `2^(1-beta) (3a/2 + delta) N^(1-beta) n` | none                   |
//!
//! For `beta < 1` only an eventual upper bound is known, so that row is a
//! bound rather than a prediction.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::exact::ExactAnalyzer;
use crate::prob::Prevalence;

/// Slack used in the `beta < 1` bound when the caller does not pick one.
pub const DEFAULT_DELTA: f64 = 0.1;

/// Exponents accepted by [`convergence_table`].
pub const TABLE_EXPONENTS: RangeInclusive<u32> = 1..=50;

/// Prevalence law `p = a N^-beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSpec {
    a: f64,
    beta: f64,
}

/// Prevalence at a given `N`; `clamped` is set when `a N^-beta > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimePoint {
    pub prevalence: Prevalence,
    pub clamped: bool,
}

impl RegimeSpec {
    pub fn new(a: f64, beta: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("regime coefficient a = {a} must be positive")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("regime exponent beta = {beta} must be positive")));
        }
        Ok(Self { a, beta })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `a N^-beta`, clamped to `[0, 1]`.
    pub fn prevalence(&self, n_items: u64) -> Result<RegimePoint> {
        if n_items == 0 {
            return Err(Error::InvalidInput("population size must be at least 1".into()));
        }
        let raw = self.a * (-(self.beta) * (n_items as f64).ln()).exp();
        self.point(raw)
    }

    /// Prevalence at `N = 2^n`, evaluated as `a 2^(-beta n)`.
    pub fn prevalence_pow2(&self, n: u32) -> Result<RegimePoint> {
        self.point(self.a * (-(self.beta) * n as f64).exp2())
    }

    fn point(&self, raw: f64) -> Result<RegimePoint> {
        let clamped = raw > 1.0;
        Ok(RegimePoint { prevalence: Prevalence::from_p(raw.min(1.0))?, clamped })
    }
}

/// The two sides of the Bernoulli inequality around `(1 - x)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliBounds {
    /// `1 - gamma x`
    pub lower: f64,
    /// `(1 - x)^gamma`
    pub value: f64,
    /// `1 - gamma x + gamma (gamma - 1) x^2 / 2`, for `x in [0, 1]` and `gamma >= 2`.
    pub upper: Option<f64>,
}

pub fn bernoulli_bounds(x: f64, gamma: f64) -> Result<BernoulliBounds> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma = {gamma} must be at least 1")));
    }
    if !(x <= 1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} must be at most 1")));
    }
    let lower = 1.0 - gamma * x;
    let value = (1.0 - x).powf(gamma);
    let upper = ((0.0..=1.0).contains(&x) && gamma >= 2.0)
        .then(|| 1.0 - gamma * x + gamma * (gamma - 1.0) * x * x / 2.0);
    Ok(BernoulliBounds { lower, value, upper })
}

fn check_population(n_items: f64) -> Result<()> {
    if !(n_items >= 2.0) {
        return Err(Error::Domain(format!("asymptotic laws need N >= 2, got {n_items}")));
    }
    Ok(())
}

/// Leading-order prediction of `E[T(N)]` (an upper bound when `beta < 1`).
pub fn mean_asymptote(spec: &RegimeSpec, n_items: f64) -> Result<f64> {
    mean_asymptote_with_delta(spec, n_items, DEFAULT_DELTA)
}

pub fn mean_asymptote_with_delta(spec: &RegimeSpec, n_items: f64, delta: f64) -> Result<f64> {
    check_population(n_items)?;
    let log2n = n_items.log2();
    let lead = 1.5 * spec.a * log2n;
    Ok(if spec.beta == 1.0 {
        lead
    } else if spec.beta > 1.0 {
        1.0 + lead * n_items.powf(1.0 - spec.beta)
    } else {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta = {delta} must be positive")));
        }
        (1.0 - spec.beta).exp2() * (1.5 * spec.a + delta) * n_items.powf(1.0 - spec.beta) * log2n
    })
}

/// Leading-order prediction of `V[T(N)]`; defined for `beta >= 1`.
pub fn variance_asymptote(spec: &RegimeSpec, n_items: f64) -> Result<f64> {
    check_population(n_items)?;
    if spec.beta < 1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "no variance law for beta = {} < 1",
            spec.beta
        )));
    }
    let log2n = n_items.log2();
    Ok(2.25 * spec.a * log2n * log2n * n_items.powf(1.0 - spec.beta))
}

/// Exact value against its asymptotic prediction at one `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteReport {
    pub n_items: u64,
    pub exact_value: f64,
    pub predicted: f64,
    /// `exact / predicted`; NaN when the prediction is zero.
    pub ratio: f64,
    /// `exact - predicted`
    pub residual: f64,
}

impl AsymptoteReport {
    pub fn new(n_items: u64, exact_value: f64, predicted: f64) -> Self {
        let ratio = if predicted != 0.0 { exact_value / predicted } else { f64::NAN };
        Self { n_items, exact_value, predicted, ratio, residual: exact_value - predicted }
    }
}

/// One row of [`convergence_table`], at `N = 2^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub n_items: u64,
    pub p: f64,
    /// The raw prevalence exceeded 1 and was clamped.
    pub clamped: bool,
    pub mean: AsymptoteReport,
    /// Absent for `beta < 1`.
    pub variance: Option<AsymptoteReport>,
    /// `E[T] - (3a/2) n`, for `beta = 1`.
    pub mean_offset: Option<f64>,
    /// `(V[T] - (9a/4) n^2) / n`, for `beta = 1`.
    pub variance_offset: Option<f64>,
}

/// Exact moments at `N = 2^n` for each `n` in `exponents`, next to the
/// leading-order laws. Rows are ordered by `n`.
pub fn convergence_table(
    spec: &RegimeSpec,
    exponents: RangeInclusive<u32>,
    delta: f64,
) -> Result<Vec<ConvergenceRow>> {
    if exponents.is_empty() {
        return Err(Error::InvalidInput("exponent range is empty".into()));
    }
    if exponents.start() < TABLE_EXPONENTS.start() || exponents.end() > TABLE_EXPONENTS.end() {
        return Err(Error::InvalidInput(format!(
            "exponents {exponents:?} must lie within {TABLE_EXPONENTS:?}"
        )));
    }
    exponents.map(|n| convergence_row(spec, n, delta)).collect()
}

fn convergence_row(spec: &RegimeSpec, n: u32, delta: f64) -> Result<ConvergenceRow> {
    let n_items = 1u64 << n;
    let point = spec.prevalence_pow2(n)?;
    let moments = ExactAnalyzer::new(point.prevalence).moments(n_items)?;
    let size = n_items as f64;
    let mean = AsymptoteReport::new(
        n_items,
        moments.mean,
        mean_asymptote_with_delta(spec, size, delta)?,
    );
    let variance = match variance_asymptote(spec, size) {
        Ok(pred) => Some(AsymptoteReport::new(n_items, moments.variance, pred)),
        Err(Error::UnsupportedRegime(_)) => None,
        Err(e) => return Err(e),
    };
    let critical = spec.beta == 1.0;
    let nf = n as f64;
    Ok(ConvergenceRow {
        n,
        n_items,
        p: point.prevalence.p(),
        clamped: point.clamped,
        mean,
        variance,
        mean_offset: critical.then_some(moments.mean - 1.5 * spec.a * nf),
        variance_offset: critical.then_some((moments.variance - 2.25 * spec.a * nf * nf) / nf),
    })
}

/// First `n` in `exponents` from which the `beta < 1` bound on `E[T(2^n)]`
/// holds through the end of the range, or `None` if it fails at the last one.
pub fn bound_holds_from(
    spec: &RegimeSpec,
    exponents: RangeInclusive<u32>,
    delta: f64,
) -> Result<Option<u32>> {
    let rows = convergence_table(spec, exponents, delta)?;
    let mut start = None;
    for row in &rows {
        if row.mean.exact_value <= row.mean.predicted {
            start.get_or_insert(row.n);
        } else {
            start = None;
        }
    }
    Ok(start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_validation() {
        assert!(RegimeSpec::new(0.0, 1.0).is_err());
        assert!(RegimeSpec::new(1.0, -1.0).is_err());
        assert!(RegimeSpec::new(f64::NAN, 1.0).is_err());
        let spec = RegimeSpec::new(4.0, 1.0).unwrap();
        let pt = spec.prevalence(2).unwrap();
        assert!(pt.clamped);
        assert_eq!(pt.prevalence.p(), 1.0);
        let pt = spec.prevalence(8).unwrap();
        assert!(!pt.clamped);
        assert!((pt.prevalence.p() - 0.5).abs() < 1e-15);
        assert_eq!(spec.prevalence_pow2(3).unwrap().prevalence.p(), 0.5);
    }

    #[test]
    fn bernoulli_examples() {
        let b = bernoulli_bounds(0.0, 5.0).unwrap();
        assert_eq!((b.lower, b.value, b.upper), (1.0, 1.0, Some(1.0)));
        let b = bernoulli_bounds(0.5, 2.0).unwrap();
        assert_eq!((b.lower, b.value, b.upper), (0.0, 0.25, Some(0.25)));
        let b = bernoulli_bounds(0.1, 3.0).unwrap();
        assert!((b.lower - 0.7).abs() < 1e-15);
        assert!((b.value - 0.729).abs() < 1e-15);
        assert!((b.upper.unwrap() - 0.73).abs() < 1e-15);
        // Upper side is undefined outside [0, 1] or below gamma = 2.
        assert_eq!(bernoulli_bounds(-0.5, 3.0).unwrap().upper, None);
        assert_eq!(bernoulli_bounds(0.5, 1.5).unwrap().upper, None);
        assert!(bernoulli_bounds(0.5, 0.9).is_err());
        assert!(bernoulli_bounds(1.5, 2.0).is_err());
    }

    #[test]
    fn mean_predictions() {
        let crit = RegimeSpec::new(2.0, 1.0).unwrap();
        assert!((mean_asymptote(&crit, 1024.0).unwrap() - 30.0).abs() < 1e-12);
        let fast = RegimeSpec::new(1.0, 2.0).unwrap();
        let got = mean_asymptote(&fast, (1u64 << 20) as f64).unwrap();
        assert!((got - (1.0 + 30.0 / (1u64 << 20) as f64)).abs() < 1e-15);
        assert!((got - 1.0000286).abs() < 1e-7);
        assert!(mean_asymptote(&crit, 1.0).is_err());
        let tiny = RegimeSpec::new(1e-12, 1.0).unwrap();
        assert!(mean_asymptote(&tiny, 1024.0).unwrap() < 1e-10);
        let slow = RegimeSpec::new(1.0, 0.5).unwrap();
        let want = 2f64.sqrt() * 1.6 * 32.0 * 10.0;
        assert!((mean_asymptote(&slow, 1024.0).unwrap() - want).abs() < 1e-9);
        assert!(mean_asymptote_with_delta(&slow, 1024.0, 0.0).is_err());
    }

    #[test]
    fn variance_predictions() {
        let crit = RegimeSpec::new(1.0, 1.0).unwrap();
        assert!((variance_asymptote(&crit, 1024.0).unwrap() - 225.0).abs() < 1e-10);
        let doubled = RegimeSpec::new(2.0, 1.0).unwrap();
        assert_eq!(variance_asymptote(&doubled, 1024.0).unwrap(), 450.0);
        let fast = RegimeSpec::new(1.0, 2.0).unwrap();
        let got = variance_asymptote(&fast, 1024.0).unwrap();
        assert!((got - 225.0 / 1024.0).abs() < 1e-12);
        let slow = RegimeSpec::new(1.0, 0.5).unwrap();
        assert!(matches!(
            variance_asymptote(&slow, 1024.0),
            Err(Error::UnsupportedRegime(_))
        ));
    }

    #[test]
    fn table_range_checks() {
        let spec = RegimeSpec::new(1.0, 1.0).unwrap();
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 5..=4;
        assert!(convergence_table(&spec, empty, DEFAULT_DELTA).is_err());
        assert!(convergence_table(&spec, 0..=3, DEFAULT_DELTA).is_err());
        assert!(convergence_table(&spec, 40..=51, DEFAULT_DELTA).is_err());
        let rows = convergence_table(&spec, 1..=5, DEFAULT_DELTA).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert!(rows[0].mean_offset.is_some());
    }

    #[test]
    fn clamped_rows_are_flagged() {
        let spec = RegimeSpec::new(8.0, 1.0).unwrap();
        let rows = convergence_table(&spec, 1..=4, DEFAULT_DELTA).unwrap();
        assert!(rows[0].clamped && rows[1].clamped);
        assert!(!rows[3].clamped);
        // All items contaminated at N = 2: 3 tests, no spread.
        assert_eq!(rows[0].mean.exact_value, 3.0);
    }
}
