use bsgt_core::asymptotics::{convergence_table, RegimeSpec, DEFAULT_DELTA};
use bsgt_core::closed_form::{mean_closed_form_pow2, variance_closed_form_pow2};
use bsgt_core::montecarlo::{coupled_ordering_check, simulate, SimConfig};
use bsgt_core::scheme::{check_monotone_extension, count_tests, SortedOracle};
use bsgt_core::verify::{extension_drops, EXTENSION_DROPS};
use bsgt_core::*;
use proptest::prelude::*;

fn lazy_count(v: &ContaminationVector) -> u64 {
    execute_scheme(v, SchemeVariant::PaperLazy).test_count
}

proptest! {
    #[test]
    fn scheme_bounds_and_resolution(items in prop::collection::vec(any::<bool>(), 1..80)) {
        let v = ContaminationVector::new(items.clone()).unwrap();
        let n = items.len() as u64;
        for variant in [SchemeVariant::PaperLazy, SchemeVariant::NaiveBothHalves] {
            let r = execute_scheme(&v, variant);
            prop_assert!(r.test_count >= 1 && r.test_count <= 2 * n - 1);
            prop_assert_eq!(r.identified_contaminated(), v.contaminated_indices());
            prop_assert_eq!(r.identified_clean().len() + v.contaminated_indices().len(), items.len());
            prop_assert_eq!(r.trace.iter().filter(|e| e.is_physical()).count() as u64, r.test_count);
            prop_assert_eq!(execute_scheme(&v, variant), r.clone());
        }
        let naive = execute_scheme(&v, SchemeVariant::NaiveBothHalves).test_count;
        prop_assert!(naive >= lazy_count(&v));
    }

    #[test]
    fn sparse_oracle_agrees_with_trace(items in prop::collection::vec(prop::bool::weighted(0.1), 1..300)) {
        let v = ContaminationVector::new(items).unwrap();
        let positions = v.contaminated_indices();
        let sparse = count_tests(&SortedOracle::new(v.len(), &positions), SchemeVariant::PaperLazy);
        prop_assert_eq!(sparse, lazy_count(&v));
    }

    #[test]
    fn moment_summary_invariants(n in 1u64..5000, q in 0.0f64..=1.0) {
        let m = variance_exact(n, q).unwrap();
        prop_assert!(m.mean >= 1.0 - 1e-12 && m.mean <= 2.0 * n as f64 - 1.0 + 1e-9);
        prop_assert!(m.variance >= 0.0);
        let implied = m.second_moment - m.mean * m.mean;
        prop_assert!((implied - m.variance).abs() <= 1e-9 * m.second_moment.max(1.0));
    }

    #[test]
    fn pmf_is_normalized(n in 1u64..300, q in 0.0f64..=1.0) {
        let pmf = pmf_exact(n, q).unwrap();
        prop_assert!((pmf.total() - 1.0).abs() < 1e-10);
        prop_assert!(pmf.weights().iter().all(|&w| w >= 0.0));
        prop_assert!(pmf.max_support() <= 2 * n as usize - 1);
        prop_assert_eq!(pmf.prob(0), 0.0);
    }
}

#[test]
fn all_contaminated_halving_recursion() {
    let t = |n: usize| lazy_count(&ContaminationVector::new(vec![true; n]).unwrap());
    for n in 2..=300 {
        assert_eq!(t(n), t(n / 2) + t(n - n / 2) + 1, "N = {n}");
    }
}

#[test]
fn recursion_matches_enumeration_at_named_points() {
    let oracle = enumerate_distribution(12, 0.9, SchemeVariant::PaperLazy).unwrap();
    assert!((mean_exact(12, 0.9).unwrap() - oracle.mean()).abs() < 1e-10);

    let oracle = enumerate_distribution(10, 0.8, SchemeVariant::PaperLazy).unwrap();
    assert!((variance_exact(10, 0.8).unwrap().variance - oracle.variance()).abs() < 1e-9);

    let oracle = enumerate_distribution(9, 0.7, SchemeVariant::PaperLazy).unwrap();
    assert!(pmf_exact(9, 0.7).unwrap().max_abs_diff(&oracle) < 1e-12);

    let oracle = enumerate_distribution(4, 0.9, SchemeVariant::PaperLazy).unwrap();
    assert!((oracle.mean() - 2.1139).abs() < 1e-12);
}

#[test]
fn recursion_matches_enumeration_beyond_acceptance_range() {
    for n in [13usize, 16, 17] {
        for q in [0.35, 0.9] {
            let oracle = enumerate_distribution(n, q, SchemeVariant::PaperLazy).unwrap();
            let pmf = pmf_exact(n as u64, q).unwrap();
            assert!(pmf.max_abs_diff(&oracle) < 1e-12, "N={n} q={q}");
        }
    }
    for n in [3usize, 6, 11] {
        let oracle = enumerate_distribution(n, 0.6, SchemeVariant::NaiveBothHalves).unwrap();
        let mut a = ExactAnalyzer::with_variant(Prevalence::from_q(0.6).unwrap(), SchemeVariant::NaiveBothHalves);
        assert!(a.pmf(n as u64).unwrap().max_abs_diff(&oracle) < 1e-12);
        assert!((a.moments(n as u64).unwrap().variance - oracle.variance()).abs() < 1e-10);
    }
}

/// Literal evaluation of the two mean formulas with plain powers.
fn literal_means(n: u32, q: f64) -> (f64, Option<f64>) {
    let pw = |k: u32| q.powf(2f64.powi(k as i32));
    let two_n = 2f64.powi(n as i32);
    let sum: f64 = (1..=n).map(|k| (pw(k) + pw(k - 1)) / 2f64.powi(k as i32)).sum();
    let first = 2.0 * two_n - 1.0 - two_n * sum;
    let second = (n >= 1).then(|| {
        let inner: f64 = (1..n).map(|k| pw(k) / 2f64.powi(k as i32)).sum();
        3.0 * two_n / 2.0 * (1.0 - inner) + two_n / 2.0 * (1.0 - q) - pw(n) - 1.0
    });
    (first, second)
}

#[test]
fn closed_forms_match_literal_evaluation() {
    for n in 0..=8 {
        for q in [0.0, 0.15, 0.5, 0.77, 0.99, 1.0] {
            let cf = mean_closed_form_pow2(n, q).unwrap();
            let (first, second) = literal_means(n, q);
            assert!((cf.sum_form - first).abs() < 1e-10 * first.max(1.0), "n={n} q={q}");
            match (cf.split_form, second) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-10 * b.max(1.0)),
                (None, None) => {}
                other => panic!("n={n}: {other:?}"),
            }
        }
    }
}

#[test]
fn closed_forms_hold_past_the_acceptance_range() {
    for n in [15u32, 20, 30] {
        for q in [0.5, 0.99, 1.0 - 1e-6] {
            let rec = variance_exact(1 << n, q).unwrap();
            let mean = mean_closed_form_pow2(n, q).unwrap();
            let var = variance_closed_form_pow2(n, q).unwrap();
            assert!((mean.value() - rec.mean).abs() <= 1e-9 * rec.mean);
            assert!(mean.relative_gap() < 1e-9);
            assert!((var.variance() - rec.variance).abs() <= 1e-8 * rec.variance.max(1.0), "n={n} q={q}");
        }
    }
}

#[test]
fn pgf_derivative_matches_mean() {
    let h = 1e-5;
    for n in 1..=64u64 {
        for q in [0.2, 0.6, 0.95] {
            let up = pgf_eval(n, q, 1.0 + h).unwrap();
            let down = pgf_eval(n, q, 1.0 - h).unwrap();
            let slope = (up - down) / (2.0 * h);
            let mean = mean_exact(n, q).unwrap();
            assert!(((slope - mean) / mean).abs() < 1e-4, "N={n} q={q}: {slope} vs {mean}");
        }
    }
}

#[test]
fn mean_is_monotone_in_q_and_n() {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for n in 1..=200u64 {
        let means: Vec<f64> = grid.iter().map(|&q| mean_exact(n, q).unwrap()).collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0] + 1e-12), "N={n}");
    }
    for &q in &grid {
        let means: Vec<f64> = (1..=200u64).map(|n| mean_exact(n, q).unwrap()).collect();
        assert!(means.windows(2).all(|w| w[1] >= w[0] - 1e-12), "q={q}");
    }
}

#[test]
fn mean_sandwiched_between_powers_of_two() {
    for n in 1..=1100u64 {
        let lo = 1u64 << n.ilog2();
        let hi = lo << u64::from(!n.is_power_of_two());
        for q in [0.1, 0.5, 0.9, 0.99] {
            let m = mean_exact(n, q).unwrap();
            assert!(mean_exact(lo, q).unwrap() <= m + 1e-12);
            assert!(m <= mean_exact(hi, q).unwrap() + 1e-12);
        }
    }
}

#[test]
fn fast_regime_decays() {
    let spec = RegimeSpec::new(1.0, 2.0).unwrap();
    let rows = convergence_table(&spec, 5..=20, DEFAULT_DELTA).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].mean.exact_value < w[0].mean.exact_value);
        assert!(w[1].variance.unwrap().exact_value < w[0].variance.unwrap().exact_value);
    }
    let last = rows.last().unwrap();
    assert!(last.mean.exact_value - 1.0 < 1e-3);
    assert!(last.variance.unwrap().exact_value < 1e-3);
}

#[test]
fn slow_regime_has_no_variance_law() {
    let spec = RegimeSpec::new(1.0, 0.5).unwrap();
    let rows = convergence_table(&spec, 1..=10, DEFAULT_DELTA).unwrap();
    assert!(rows.iter().all(|r| r.variance.is_none() && r.mean_offset.is_none()));
}

#[test]
fn critical_variance_confirmed_by_simulation() {
    // Independent check of the exact variance where the leading-order law is
    // still far off (a = 2, N = 2^30).
    let spec = RegimeSpec::new(2.0, 1.0).unwrap();
    let n_items = 1u64 << 30;
    let exact = ExactAnalyzer::new(spec.prevalence_pow2(30).unwrap().prevalence)
        .moments(n_items)
        .unwrap();
    let est = simulate(&SimConfig::from_regime(&spec, n_items, 200_000, 17).unwrap()).unwrap();
    assert!(est.z_score(exact.mean).abs() < 4.0);
    assert!(((est.variance - exact.variance) / exact.variance).abs() < 0.03, "{} vs {}", est.variance, exact.variance);
}

#[test]
fn simulation_is_reproducible() {
    let cfg = SimConfig::new(333, Prevalence::from_q(0.97).unwrap(), 30_000, 99);
    assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
    assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg.with_workers(4)).unwrap());
    let other = SimConfig { seed: 100, ..cfg };
    assert_ne!(simulate(&cfg).unwrap(), simulate(&other).unwrap());
}

#[test]
fn estimator_is_calibrated_at_small_n() {
    let exact = mean_exact(37, 0.9).unwrap();
    let passed = (0..100u64)
        .filter(|&seed| {
            let cfg = SimConfig::new(37, Prevalence::from_q(0.9).unwrap(), 10_000, seed);
            simulate(&cfg).unwrap().z_score(exact).abs() <= 4.0
        })
        .count();
    assert!(passed >= 99, "{passed}/100");
}

#[test]
fn extension_from_a_power_of_two_never_lowers_count() {
    for n in [1usize, 2, 4, 8, 16] {
        for mask in 0u64..(1 << n) {
            let v = ContaminationVector::from_mask(mask, n).unwrap();
            assert!(check_monotone_extension(&v, false) && check_monotone_extension(&v, true));
        }
    }
}

#[test]
fn extension_drops_match_census() {
    for n in 1..=10 {
        assert_eq!(extension_drops(n), EXTENSION_DROPS[n - 1], "N={n}");
    }
    let smallest = (1..=10).find(|&n| extension_drops(n) != (0, 0));
    assert_eq!(smallest, Some(5));
}

#[test]
fn population_order_holds_in_distribution() {
    // Pathwise extension fails, but the CDFs stay ordered.
    for n in 1..=14 {
        for q in (0..=50).map(|i| i as f64 / 50.0) {
            let a = enumerate_distribution(n, q, SchemeVariant::PaperLazy).unwrap();
            let b = enumerate_distribution(n + 1, q, SchemeVariant::PaperLazy).unwrap();
            let (ca, cb) = (a.cdf(2 * n + 1), b.cdf(2 * n + 1));
            assert!(ca.iter().zip(&cb).all(|(x, y)| y <= &(x + 1e-12)), "N={n} q={q}");
        }
    }
}

#[test]
fn coupling_examples() {
    let near = coupled_ordering_check(10, 0.95, 0.9, 10_000, 3).unwrap();
    assert_eq!(near.ordering_violations, 0);
    assert!(coupled_ordering_check(7, 0.8, 0.5, 10_000, 4).unwrap().ordering_violations == 0);
    assert!(coupled_ordering_check(64, 1.0, 0.0, 100, 5).unwrap().is_clean());
    // From a power of two the appended item only lengthens the right half.
    assert!(coupled_ordering_check(1024, 0.999, 0.998, 2_000, 6).unwrap().is_clean());
    // Elsewhere the split point moves and some paths lose tests.
    assert!(coupled_ordering_check(1000, 0.999, 0.998, 2_000, 6).unwrap().extension_violations > 0);
}
