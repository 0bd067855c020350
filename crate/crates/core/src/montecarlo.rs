//! Monte Carlo estimation of `T(N)`.
//!
//! Replicate `r` always draws from [`replicate_rng`]`(seed, r)`. Test counts
//! are integers, so each block of replicates is summarized by exact integer
//! sums of `T` and `T^2`; adding block sums is associative, which makes the
//! estimate bit-identical for any worker count.

use std::ops::Range;

use crate::asymptotics::RegimeSpec;
use crate::error::{Error, Result};
use crate::prob::Prevalence;
use crate::scheme::{count_tests, SchemeVariant, SortedOracle};
use crate::stream::{replicate_rng, LowUniforms};

/// Replicates handled as one unit of work.
const BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_items: u64,
    pub prevalence: Prevalence,
    pub reps: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn new(n_items: u64, prevalence: Prevalence, reps: u64, seed: u64) -> Self {
        Self { n_items, prevalence, reps, seed, workers: 1 }
    }

    /// Configuration with the prevalence taken from a regime at `n_items`.
    pub fn from_regime(spec: &RegimeSpec, n_items: u64, reps: u64, seed: u64) -> Result<Self> {
        Ok(Self::new(n_items, spec.prevalence(n_items)?.prevalence, reps, seed))
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<usize> {
        if self.n_items == 0 {
            return Err(Error::InvalidInput("population size must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        let len = usize::try_from(self.n_items)
            .map_err(|_| Error::ResourceLimit(format!("N = {} does not fit in memory", self.n_items)))?;
        // The variance numerator reps * sum(T^2) must fit in u128.
        let max_t = 2 * self.n_items as u128 - 1;
        (self.reps as u128)
            .checked_mul(self.reps as u128)
            .and_then(|r2| r2.checked_mul(max_t * max_t))
            .ok_or_else(|| {
                Error::ResourceLimit(format!(
                    "reps = {} with N = {} overflows the exact accumulators",
                    self.reps, self.n_items
                ))
            })?;
        Ok(len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    /// Unbiased sample variance (zero for a single replicate).
    pub variance: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub reps: u64,
}

impl SimEstimate {
    /// `(mean - exact) / std_error`; infinite when the estimate has no spread
    /// but misses `exact`.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = self.mean - exact;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Sums {
    count: u64,
    total: u128,
    squares: u128,
}

impl Sums {
    fn push(&mut self, t: u64) {
        self.count += 1;
        self.total += t as u128;
        self.squares += (t as u128) * (t as u128);
    }

    fn merge(self, other: Sums) -> Sums {
        Sums {
            count: self.count + other.count,
            total: self.total + other.total,
            squares: self.squares + other.squares,
        }
    }

    fn estimate(&self) -> SimEstimate {
        let n = self.count as u128;
        let mean = self.total as f64 / self.count as f64;
        let variance = if n > 1 {
            // n * sum(T^2) - (sum T)^2 >= 0 exactly.
            let num = n * self.squares - self.total * self.total;
            num as f64 / (n * (n - 1)) as f64
        } else {
            0.0
        };
        let std_error = (variance / self.count as f64).sqrt();
        SimEstimate {
            mean,
            variance,
            std_error,
            ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
            reps: self.count,
        }
    }
}

/// Runs `reps` in the given range and returns the test count of each,
/// handing them to `sink` in replicate order.
fn run_replicates(
    len: usize,
    p: f64,
    seed: u64,
    reps: Range<u64>,
    mut sink: impl FnMut(u64),
) {
    let mut field = LowUniforms::default();
    let mut positions = Vec::new();
    for r in reps {
        field.resample(&mut replicate_rng(seed, r), len, p);
        field.positions_below(p, len, &mut positions);
        sink(count_tests(&SortedOracle::new(len, &positions), SchemeVariant::PaperLazy));
    }
}

fn block_sums(len: usize, p: f64, seed: u64, block: u64, reps: u64) -> Sums {
    let start = block * BLOCK;
    let end = (start + BLOCK).min(reps);
    let mut sums = Sums::default();
    run_replicates(len, p, seed, start..end, |t| sums.push(t));
    sums
}

/// Estimates mean and variance of `T(N)` under the lazy scheme.
pub fn simulate(cfg: &SimConfig) -> Result<SimEstimate> {
    let len = cfg.validate()?;
    let p = cfg.prevalence.p();
    let blocks = cfg.reps.div_ceil(BLOCK);
    let workers = (cfg.workers as u64).min(blocks).max(1);

    let sums = if workers == 1 {
        (0..blocks)
            .map(|b| block_sums(len, p, cfg.seed, b, cfg.reps))
            .fold(Sums::default(), Sums::merge)
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        (w..blocks)
                            .step_by(workers as usize)
                            .map(|b| block_sums(len, p, cfg.seed, b, cfg.reps))
                            .fold(Sums::default(), Sums::merge)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation worker panicked"))
                .fold(Sums::default(), Sums::merge)
        })
    };
    Ok(sums.estimate())
}

/// Outcome of [`coupled_ordering_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CouplingReport {
    pub reps: u64,
    /// Replicates where the cleaner population needed more tests.
    pub ordering_violations: u64,
    /// Replicates where appending item `N + 1` lowered the test count. This
    /// can happen whenever the extra item moves a split point, so only the
    /// ordering count is expected to be zero in general.
    pub extension_violations: u64,
}

impl CouplingReport {
    pub fn is_clean(&self) -> bool {
        self.ordering_violations == 0 && self.extension_violations == 0
    }
}

/// Runs both prevalences on shared uniforms and checks, per replicate, that
/// the higher clean probability `q1` never needs more tests than `q2`, and
/// counts the replicates where appending one more item (from the same draws)
/// reduces the count for either.
pub fn coupled_ordering_check(
    n_items: u64,
    q1: f64,
    q2: f64,
    reps: u64,
    seed: u64,
) -> Result<CouplingReport> {
    let high = Prevalence::from_q(q1)?;
    let low = Prevalence::from_q(q2)?;
    if !(q1 > q2) {
        return Err(Error::Domain(format!("coupling needs q1 > q2, got q1 = {q1}, q2 = {q2}")));
    }
    if n_items == 0 {
        return Err(Error::InvalidInput("population size must be at least 1".into()));
    }
    let len = usize::try_from(n_items)
        .map_err(|_| Error::ResourceLimit(format!("N = {n_items} does not fit in memory")))?;
    let (p1, p2) = (high.p(), low.p());
    let mut report = CouplingReport { reps, ..Default::default() };
    let mut field = LowUniforms::default();
    let mut buf = Vec::new();
    let tests = |field: &LowUniforms, p: f64, prefix: usize, buf: &mut Vec<usize>| {
        field.positions_below(p, prefix, buf);
        count_tests(&SortedOracle::new(prefix, buf), SchemeVariant::PaperLazy)
    };
    for r in 0..reps {
        field.resample(&mut replicate_rng(seed, r), len + 1, p2);
        let t1 = tests(&field, p1, len, &mut buf);
        let t2 = tests(&field, p2, len, &mut buf);
        if t1 > t2 {
            report.ordering_violations += 1;
        }
        let t1_ext = tests(&field, p1, len + 1, &mut buf);
        let t2_ext = tests(&field, p2, len + 1, &mut buf);
        if t1 > t1_ext || t2 > t2_ext {
            report.extension_violations += 1;
        }
    }
    Ok(report)
}

/// Binned sample of `T(N) / ln N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin includes its right edge.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Empirical mean of `T / ln N`.
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Every sample was strictly positive.
    pub all_positive: bool,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Simulates `T(N)` in the `beta = 1` regime and bins `T / ln N` on
/// `[0, max]`. Exploratory only: no limiting law is fitted or assumed.
pub fn histogram_t_over_log_n(
    spec: &RegimeSpec,
    n_items: u64,
    reps: u64,
    seed: u64,
    bins: usize,
) -> Result<Histogram> {
    if spec.beta() != 1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "the T/ln N histogram is defined for beta = 1, got {}",
            spec.beta()
        )));
    }
    if n_items < 2 {
        return Err(Error::Domain(format!("ln N must be positive, got N = {n_items}")));
    }
    if bins == 0 {
        return Err(Error::InvalidInput("at least one bin is required".into()));
    }
    let cfg = SimConfig::from_regime(spec, n_items, reps, seed)?;
    let len = cfg.validate()?;
    let log_n = (n_items as f64).ln();

    let mut samples = Vec::with_capacity(reps as usize);
    run_replicates(len, cfg.prevalence.p(), seed, 0..reps, |t| samples.push(t as f64 / log_n));

    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = samples.iter().sum::<f64>() / reps as f64;
    let width = max / bins as f64;
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &x in &samples {
        let i = ((x / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts, mean, min, max, all_positive: min > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::mean_exact;

    fn cfg(n: u64, q: f64, reps: u64, seed: u64) -> SimConfig {
        SimConfig::new(n, Prevalence::from_q(q).unwrap(), reps, seed)
    }

    #[test]
    fn clean_population() {
        let est = simulate(&cfg(50, 1.0, 1000, 3)).unwrap();
        assert_eq!((est.mean, est.variance), (1.0, 0.0));
    }

    #[test]
    fn fully_contaminated_population() {
        let est = simulate(&cfg(16, 0.0, 100, 3)).unwrap();
        assert_eq!((est.mean, est.variance), (31.0, 0.0));
        assert_eq!(est.ci95, (31.0, 31.0));
    }

    #[test]
    fn single_replicate_has_zero_variance() {
        let est = simulate(&cfg(30, 0.5, 1, 3)).unwrap();
        assert_eq!(est.variance, 0.0);
        assert_eq!(est.reps, 1);
    }

    #[test]
    fn invalid_configs() {
        assert!(simulate(&cfg(0, 0.5, 10, 1)).is_err());
        assert!(simulate(&cfg(10, 0.5, 0, 1)).is_err());
        assert!(simulate(&cfg(10, 0.5, 10, 1).with_workers(0)).is_err());
        assert!(matches!(
            simulate(&cfg(1 << 62, 0.5, u64::MAX / 2, 1)),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn worker_count_does_not_change_estimate() {
        let base = simulate(&cfg(200, 0.97, 20_000, 42)).unwrap();
        for w in [2, 3, 8] {
            assert_eq!(simulate(&cfg(200, 0.97, 20_000, 42).with_workers(w)).unwrap(), base);
        }
    }

    #[test]
    fn estimate_is_close_to_exact() {
        let est = simulate(&cfg(64, 0.95, 50_000, 9)).unwrap();
        let exact = mean_exact(64, 0.95).unwrap();
        assert!(est.z_score(exact).abs() < 4.0, "{est:?} vs {exact}");
    }

    #[test]
    fn coupling_extremes() {
        let report = coupled_ordering_check(25, 1.0, 0.0, 200, 1).unwrap();
        assert!(report.is_clean());
        assert!(coupled_ordering_check(25, 0.5, 0.5, 10, 1).is_err());
        assert!(coupled_ordering_check(25, 0.4, 0.5, 10, 1).is_err());
    }

    #[test]
    fn histogram_conserves_mass() {
        let spec = RegimeSpec::new(1.0, 1.0).unwrap();
        let h = histogram_t_over_log_n(&spec, 1024, 5000, 2, 20).unwrap();
        assert_eq!(h.total(), 5000);
        assert_eq!(h.edges.len(), 21);
        assert!(h.all_positive);
        let wrong = RegimeSpec::new(1.0, 2.0).unwrap();
        assert!(histogram_t_over_log_n(&wrong, 1024, 10, 2, 20).is_err());
        assert!(histogram_t_over_log_n(&spec, 1, 10, 2, 20).is_err());
        assert!(histogram_t_over_log_n(&spec, 1024, 10, 2, 0).is_err());
    }

    #[test]
    fn histogram_nearly_clean_population() {
        let spec = RegimeSpec::new(1e-9, 1.0).unwrap();
        let n = 4096u64;
        let h = histogram_t_over_log_n(&spec, n, 2000, 2, 10).unwrap();
        let one = 1.0 / (n as f64).ln();
        assert_eq!(h.max, one);
        assert_eq!(h.counts[9], 2000);
        assert!(h.edges[9] <= one && one <= h.edges[10]);
    }
}
