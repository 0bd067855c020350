use bsgt_wasm::*;

#[test]
fn distribution_matches_known_values() {
    let d = distribution(2, 0.5, "lazy").unwrap();
    assert_eq!(d.probs(), vec![0.0, 0.25, 0.25, 0.5]);
    assert!((d.mean() - 2.25).abs() < 1e-12);
    assert!((d.variance() - 0.6875).abs() < 1e-12);
    let naive = distribution(2, 0.5, "naive").unwrap();
    assert!((naive.mean() - 2.5).abs() < 1e-12);
}

#[test]
fn distribution_rejects_bad_input() {
    assert!(distribution(0, 0.5, "lazy").is_err());
    assert!(distribution(MAX_PMF_ITEMS + 1, 0.5, "lazy").is_err());
    assert!(distribution(4, 1.5, "lazy").is_err());
    assert!(distribution(4, 0.5, "eager").is_err());
}

#[test]
fn curve_columns_line_up() {
    let c = curve(1.0, 1.0, 4, 12).unwrap();
    assert_eq!(c.n(), (4..=12).map(f64::from).collect::<Vec<_>>());
    assert_eq!(c.mean_pred()[0], 6.0);
    assert!(c.var_exact().iter().all(|v| v.is_finite()));
    let slow = curve(1.0, 0.5, 1, 5).unwrap();
    assert!(slow.var_exact().iter().all(|v| v.is_nan()));
    assert!(curve(1.0, 1.0, 5, 4).is_err());
    assert!(curve(-1.0, 1.0, 1, 4).is_err());
}

#[test]
fn trace_encodes_steps() {
    let t = run_trace("0001", "lazy").unwrap();
    assert_eq!(t.test_count(), 3);
    assert_eq!(t.contaminated(), vec![3]);
    let steps = t.steps();
    assert_eq!(steps.len() % 3, 0);
    assert_eq!(&steps[..3], &[0, 4, STEP_POSITIVE]);
    assert_eq!(&steps[3..6], &[0, 2, STEP_NEGATIVE]);
    assert_eq!(&steps[6..9], &[2, 4, STEP_INFERRED]);
    let tests = steps.chunks(3).filter(|s| s[2] != STEP_INFERRED).count();
    assert_eq!(tests as u32, t.test_count());
    assert!(run_trace("01x", "lazy").is_err());
    assert!(run_trace("", "lazy").is_err());
    assert!(run_trace(&"0".repeat(MAX_TRACE_ITEMS + 1), "lazy").is_err());
}
