//! Self-check suite: exhaustive scheme properties, exact recursions against
//! enumeration, closed-form identities and the Bernoulli bounds.

use rand::Rng;

use crate::asymptotics::bernoulli_bounds;
use crate::closed_form::{
    mean_closed_form_pow2, relative_gap, variance_closed_form_pow2,
};
use crate::exact::ExactAnalyzer;
use crate::prob::Prevalence;
use crate::scheme::{
    count_tests_mask, enumerate_distribution, execute_scheme, ContaminationVector, SchemeVariant,
};
use crate::stream::replicate_rng;

/// Absolute tolerance on probabilities, relative on moments (floored at 1).
pub const ORACLE_TOL: f64 = 1e-10;
/// Relative tolerance for the closed forms and their identities.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Largest population for the per-pattern scheme checks.
pub const EXHAUSTIVE_ITEMS: usize = 10;
/// Largest exponent for the closed-form cross-checks.
pub const CLOSED_FORM_EXPONENTS: u32 = 10;

/// `q = 0, 0.1, ..., 1`.
pub fn q_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Largest `N` compared against exhaustive enumeration.
    pub max_oracle_n: usize,
    /// Scheme whose exact recursion is compared with the closed forms. Only
    /// the lazy scheme matches; the naive one is a negative control.
    pub closed_form_variant: SchemeVariant,
    pub lemma_draws: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_oracle_n: 12,
            closed_form_variant: SchemeVariant::PaperLazy,
            lemma_draws: 100_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn outcome(name: &'static str, failures: Vec<String>, ok_detail: String) -> CheckOutcome {
    match failures.first() {
        None => CheckOutcome { name, passed: true, detail: ok_detail },
        Some(first) => CheckOutcome {
            name,
            passed: false,
            detail: format!("{} failure(s); first: {first}", failures.len()),
        },
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let exhaustive = opts.max_oracle_n.min(EXHAUSTIVE_ITEMS);
    VerifyReport {
        checks: vec![
            scheme_invariants(exhaustive),
            extension_monotonicity(exhaustive),
            ordering_in_population(exhaustive),
            ordering_in_prevalence(exhaustive),
            oracle_equivalence(opts.max_oracle_n),
            mean_closed_form(opts.closed_form_variant),
            variance_closed_form(opts.closed_form_variant),
            naive_separation(),
            lemma_bounds(opts.lemma_draws, opts.seed),
        ],
    }
}

/// Bounds, resolution and naive >= lazy on every pattern with `N <= max_n`.
pub fn scheme_invariants(max_n: usize) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut patterns = 0u64;
    for n in 1..=max_n {
        for mask in 0u64..(1 << n) {
            patterns += 1;
            let v = ContaminationVector::from_mask(mask, n).expect("n >= 1");
            let lazy = execute_scheme(&v, SchemeVariant::PaperLazy);
            let naive = execute_scheme(&v, SchemeVariant::NaiveBothHalves);
            let t = lazy.test_count;
            let max_t = 2 * n as u64 - 1;
            let mut bad = |what: &str| failures.push(format!("N={n} mask={mask:#b}: {what}"));
            if !(1..=max_t).contains(&t) {
                bad("count outside [1, 2N-1]");
            }
            // For N = 1 the bounds coincide.
            if n >= 2 && (t == 1) != (mask == 0) {
                bad("count is 1 exactly when nothing is contaminated");
            }
            if mask == (1 << n) - 1 && t != max_t {
                bad("all-contaminated count is not 2N-1");
            }
            for run in [&lazy, &naive] {
                let hits = run.identified_contaminated();
                let clean = run.identified_clean();
                if hits != v.contaminated_indices() {
                    bad("trace misidentifies contaminated items");
                }
                if clean.len() + hits.len() != n {
                    bad("trace leaves items unresolved");
                }
            }
            if naive.test_count < t {
                bad("naive variant used fewer tests than lazy");
            }
        }
    }
    outcome("scheme invariants", failures, format!("{patterns} patterns, N <= {max_n}"))
}

/// Patterns of length `N` (index `N - 1`) whose lazy count drops when a clean
/// or a contaminated item is appended. Appending can move the split point,
/// so `T_N(v) <= T_{N+1}(v, x)` fails pathwise, e.g. `10100` takes 7 tests
/// and `101000` takes 6. The ordering does hold in distribution.
pub const EXTENSION_DROPS: [(u64, u64); EXHAUSTIVE_ITEMS] = [
    (0, 0),
    (0, 0),
    (0, 0),
    (0, 0),
    (4, 0),
    (0, 0),
    (22, 9),
    (0, 0),
    (100, 27),
    (128, 0),
];

/// Count of patterns of length `n` whose count drops when a clean
/// (first) or contaminated (second) item is appended.
pub fn extension_drops(n: usize) -> (u64, u64) {
    let mut drops = [0u64; 2];
    for mask in 0u32..(1 << n) {
        let base = count_tests_mask(mask, n, SchemeVariant::PaperLazy);
        for extra in [0u32, 1] {
            if count_tests_mask(mask | extra << n, n + 1, SchemeVariant::PaperLazy) < base {
                drops[extra as usize] += 1;
            }
        }
    }
    (drops[0], drops[1])
}

/// Pathwise extension census against [`EXTENSION_DROPS`].
pub fn extension_monotonicity(max_n: usize) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut total = 0;
    for n in 1..=max_n.min(EXHAUSTIVE_ITEMS) {
        let got = extension_drops(n);
        total += got.0 + got.1;
        if got != EXTENSION_DROPS[n - 1] {
            failures.push(format!("N={n}: {got:?} vs {:?}", EXTENSION_DROPS[n - 1]));
        }
    }
    outcome(
        "extension census",
        failures,
        format!("N <= {max_n}: {total} patterns lose tests when extended (expected; order holds in distribution)"),
    )
}

/// `true` when `CDF_a <= CDF_b` pointwise (so `a` is stochastically larger).
fn cdf_below(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= *y + 1e-12)
}

/// `T(N) <=_st T(N+1)` on the q grid.
pub fn ordering_in_population(max_n: usize) -> CheckOutcome {
    let mut failures = Vec::new();
    for q in q_grid() {
        for n in 1..=max_n {
            let small = enumerate_distribution(n, q, SchemeVariant::PaperLazy).expect("n <= 20");
            let large = enumerate_distribution(n + 1, q, SchemeVariant::PaperLazy).expect("n <= 20");
            let upto = 2 * (n + 1);
            if !cdf_below(&large.cdf(upto), &small.cdf(upto)) {
                failures.push(format!("N={n} q={q}"));
            }
        }
    }
    outcome("stochastic order in N", failures, format!("N <= {max_n}, q grid"))
}

/// `q1 > q2 => T(N; q1) <=_st T(N; q2)` on the q grid.
pub fn ordering_in_prevalence(max_n: usize) -> CheckOutcome {
    let mut failures = Vec::new();
    let grid = q_grid();
    for n in 1..=max_n {
        let cdfs: Vec<Vec<f64>> = grid
            .iter()
            .map(|&q| {
                enumerate_distribution(n, q, SchemeVariant::PaperLazy)
                    .expect("n <= 20")
                    .cdf(2 * n)
            })
            .collect();
        for (i, hi) in cdfs.iter().enumerate() {
            for lo in &cdfs[..i] {
                // grid[i] > grid[j]: the cleaner population has the larger CDF.
                if !cdf_below(lo, hi) {
                    failures.push(format!("N={n} q1={} ", grid[i]));
                }
            }
        }
    }
    outcome("stochastic order in q", failures, format!("N <= {max_n}, q grid"))
}

/// Recursion mean, variance and PMF against enumeration.
pub fn oracle_equivalence(max_n: usize) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for n in 1..=max_n {
        for q in q_grid() {
            let oracle = enumerate_distribution(n, q, SchemeVariant::PaperLazy).expect("n <= 20");
            let mut exact = ExactAnalyzer::new(Prevalence::from_q(q).expect("grid q"));
            let m = exact.moments(n as u64).expect("n >= 1");
            let pmf = exact.pmf(n as u64).expect("n small");
            let d = oracle.max_abs_diff(&pmf);
            worst = worst.max(d);
            if d > ORACLE_TOL {
                failures.push(format!("N={n} q={q}: PMF differs by {d:e}"));
            }
            if !close(m.mean, oracle.mean(), ORACLE_TOL) {
                failures.push(format!("N={n} q={q}: mean {} vs {}", m.mean, oracle.mean()));
            }
            if !close(m.variance, oracle.variance(), ORACLE_TOL) {
                failures.push(format!("N={n} q={q}: variance {} vs {}", m.variance, oracle.variance()));
            }
        }
    }
    outcome(
        "recursions vs enumeration",
        failures,
        format!("N <= {max_n}, q grid, worst PMF gap {worst:.1e}"),
    )
}

/// Both mean closed forms against each other and against the recursion of
/// `variant` at `N = 2^n`.
pub fn mean_closed_form(variant: SchemeVariant) -> CheckOutcome {
    let mut failures = Vec::new();
    for n in 0..=CLOSED_FORM_EXPONENTS {
        for q in q_grid() {
            let cf = mean_closed_form_pow2(n, q).expect("n <= 60");
            if cf.relative_gap() > CLOSED_FORM_TOL {
                failures.push(format!("n={n} q={q}: sum form vs split form {:e}", cf.relative_gap()));
            }
            let mut exact = ExactAnalyzer::with_variant(Prevalence::from_q(q).expect("grid q"), variant);
            let rec = exact.moments(1 << n).expect("n >= 0").mean;
            if relative_gap(rec, cf.value()) > CLOSED_FORM_TOL {
                failures.push(format!(
                    "n={n} q={q}: {} recursion {rec} vs closed form {}",
                    variant.name(),
                    cf.value()
                ));
            }
        }
    }
    outcome(
        "mean closed forms",
        failures,
        format!("n <= {CLOSED_FORM_EXPONENTS}, q grid, {} scheme", variant.name()),
    )
}

/// `V1 + V2 = V3 + V4` and agreement with the recursion of `variant`.
pub fn variance_closed_form(variant: SchemeVariant) -> CheckOutcome {
    let mut failures = Vec::new();
    for n in 0..=CLOSED_FORM_EXPONENTS {
        for q in q_grid() {
            let parts = variance_closed_form_pow2(n, q).expect("n <= 60");
            if parts.relative_gap() > CLOSED_FORM_TOL {
                failures.push(format!("n={n} q={q}: V1+V2 vs V3+V4 {:e}", parts.relative_gap()));
            }
            let mut exact = ExactAnalyzer::with_variant(Prevalence::from_q(q).expect("grid q"), variant);
            let rec = exact.moments(1 << n).expect("n >= 0").variance;
            if relative_gap(rec, parts.variance()) > CLOSED_FORM_TOL {
                failures.push(format!(
                    "n={n} q={q}: {} recursion {rec} vs closed form {}",
                    variant.name(),
                    parts.variance()
                ));
            }
        }
    }
    outcome(
        "variance closed forms",
        failures,
        format!("n <= {CLOSED_FORM_EXPONENTS}, q grid, {} scheme", variant.name()),
    )
}

/// The naive scheme's `E[T(2)] = 3 - 2q^2` must differ from the closed form
/// `3 - q - q^2` on the open q grid.
pub fn naive_separation() -> CheckOutcome {
    let mut failures = Vec::new();
    for q in q_grid().into_iter().filter(|&q| q > 0.0 && q < 1.0) {
        let naive = enumerate_distribution(2, q, SchemeVariant::NaiveBothHalves)
            .expect("n = 2")
            .mean();
        let cf = mean_closed_form_pow2(1, q).expect("n = 1").value();
        if !close(naive, 3.0 - 2.0 * q * q, ORACLE_TOL) {
            failures.push(format!("q={q}: naive mean {naive} is not 3 - 2q^2"));
        }
        if close(naive, cf, CLOSED_FORM_TOL) {
            failures.push(format!("q={q}: naive mean matches the closed form"));
        }
    }
    outcome("naive scheme separated", failures, "N = 2, q in (0, 1)".into())
}

/// Ordering of the Bernoulli bounds on random draws plus the equality cases.
pub fn lemma_bounds(draws: usize, seed: u64) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut rng = replicate_rng(seed, 0);
    for _ in 0..draws {
        let x = rng.random_range(-2.0..=1.0);
        let gamma = rng.random_range(1.0..=40.0);
        let b = bernoulli_bounds(x, gamma).expect("valid draw");
        if b.lower > b.value {
            failures.push(format!("x={x} gamma={gamma}: lower {} > value {}", b.lower, b.value));
        }
        if let Some(upper) = b.upper {
            if b.value > upper {
                failures.push(format!("x={x} gamma={gamma}: value {} > upper {upper}", b.value));
            }
        }
    }
    let eps = 4.0 * f64::EPSILON;
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        let one = bernoulli_bounds(x, 1.0).expect("gamma = 1");
        if (one.lower - one.value).abs() > eps {
            failures.push(format!("gamma=1 x={x}: lower != value"));
        }
        let two = bernoulli_bounds(x, 2.0).expect("gamma = 2");
        if (two.upper.expect("x in [0,1]") - two.value).abs() > eps {
            failures.push(format!("gamma=2 x={x}: value != upper"));
        }
    }
    for gamma in [1.0, 2.0, 3.5, 17.0] {
        let b = bernoulli_bounds(0.0, gamma).expect("x = 0");
        if b.lower != 1.0 || b.value != 1.0 || b.upper.is_some_and(|u| u != 1.0) {
            failures.push(format!("x=0 gamma={gamma}: not all equal to 1"));
        }
    }
    outcome("Bernoulli bounds", failures, format!("{draws} random draws plus equality cases"))
}
