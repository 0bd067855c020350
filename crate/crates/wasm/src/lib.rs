//! Browser bindings: exact PMF, regime convergence curves and scheme traces.
//!
//! The page in `www/` loads the `wasm-bindgen --target web` output from
//! `www/pkg/`.

use bsgt_core::asymptotics::{convergence_table, RegimeSpec, DEFAULT_DELTA};
use bsgt_core::scheme::{TestOutcome, TraceKind};
use bsgt_core::{execute_scheme, ContaminationVector, ExactAnalyzer, Prevalence, SchemeVariant};
use wasm_bindgen::prelude::*;

/// Largest population accepted by [`pmf`].
pub const MAX_PMF_ITEMS: u32 = 4096;
/// Longest pattern accepted by [`trace`].
pub const MAX_TRACE_ITEMS: usize = 256;

fn fail(e: impl ToString) -> JsError {
    JsError::new(&e.to_string())
}

fn variant(name: &str) -> Result<SchemeVariant, String> {
    name.parse().map_err(|_| format!("unknown scheme variant '{name}'"))
}

/// Exact distribution and moments of the test count.
#[wasm_bindgen]
pub struct Distribution {
    probs: Vec<f64>,
    mean: f64,
    variance: f64,
}

#[wasm_bindgen]
impl Distribution {
    /// `probs[t]` is the probability of exactly `t` tests.
    #[wasm_bindgen(getter)]
    pub fn probs(&self) -> Vec<f64> {
        self.probs.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[wasm_bindgen(getter)]
    pub fn variance(&self) -> f64 {
        self.variance
    }
}

pub fn distribution(n_items: u32, q: f64, variant_name: &str) -> Result<Distribution, String> {
    if !(1..=MAX_PMF_ITEMS).contains(&n_items) {
        return Err(format!("N must be in 1..={MAX_PMF_ITEMS}"));
    }
    let prev = Prevalence::from_q(q).map_err(|e| e.to_string())?;
    let mut analyzer = ExactAnalyzer::with_variant(prev, variant(variant_name)?);
    let n = u64::from(n_items);
    let m = analyzer.moments(n).map_err(|e| e.to_string())?;
    let pmf = analyzer.pmf(n).map_err(|e| e.to_string())?;
    Ok(Distribution { probs: pmf.weights().to_vec(), mean: m.mean, variance: m.variance })
}

#[wasm_bindgen]
pub fn pmf(n_items: u32, q: f64, variant: &str) -> Result<Distribution, JsError> {
    distribution(n_items, q, variant).map_err(fail)
}

/// Exact and predicted moments at `N = 2^n`, one entry per exponent.
/// Variance columns are `NaN` where no variance law applies.
#[wasm_bindgen]
pub struct Curve {
    n: Vec<f64>,
    mean_exact: Vec<f64>,
    mean_pred: Vec<f64>,
    var_exact: Vec<f64>,
    var_pred: Vec<f64>,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> Vec<f64> {
        self.n.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mean_exact(&self) -> Vec<f64> {
        self.mean_exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mean_pred(&self) -> Vec<f64> {
        self.mean_pred.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn var_exact(&self) -> Vec<f64> {
        self.var_exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn var_pred(&self) -> Vec<f64> {
        self.var_pred.clone()
    }
}

pub fn curve(a: f64, beta: f64, n_min: u32, n_max: u32) -> Result<Curve, String> {
    let spec = RegimeSpec::new(a, beta).map_err(|e| e.to_string())?;
    let rows = convergence_table(&spec, n_min..=n_max, DEFAULT_DELTA).map_err(|e| e.to_string())?;
    let var = |f: fn(&bsgt_core::asymptotics::AsymptoteReport) -> f64| {
        rows.iter().map(|r| r.variance.as_ref().map_or(f64::NAN, f)).collect()
    };
    Ok(Curve {
        n: rows.iter().map(|r| f64::from(r.n)).collect(),
        mean_exact: rows.iter().map(|r| r.mean.exact_value).collect(),
        mean_pred: rows.iter().map(|r| r.mean.predicted).collect(),
        var_exact: var(|v| v.exact_value),
        var_pred: var(|v| v.predicted),
    })
}

#[wasm_bindgen]
pub fn convergence(a: f64, beta: f64, n_min: u32, n_max: u32) -> Result<Curve, JsError> {
    curve(a, beta, n_min, n_max).map_err(fail)
}

/// Kind codes in [`Trace::steps`].
pub const STEP_NEGATIVE: u32 = 0;
pub const STEP_POSITIVE: u32 = 1;
pub const STEP_INFERRED: u32 = 2;

/// A scheme run on a fixed pattern.
#[wasm_bindgen]
pub struct Trace {
    test_count: u32,
    steps: Vec<u32>,
    contaminated: Vec<u32>,
}

#[wasm_bindgen]
impl Trace {
    /// Physical tests used.
    #[wasm_bindgen(getter)]
    pub fn test_count(&self) -> u32 {
        self.test_count
    }

    /// Flat `[start, end, kind]` triples in execution order; `start..end` is
    /// the 0-based half-open group and `kind` is 0 (tested negative),
    /// 1 (tested positive) or 2 (inferred positive, no test).
    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> Vec<u32> {
        self.steps.clone()
    }

    /// Items the run identified as contaminated.
    #[wasm_bindgen(getter)]
    pub fn contaminated(&self) -> Vec<u32> {
        self.contaminated.clone()
    }
}

pub fn run_trace(pattern: &str, variant_name: &str) -> Result<Trace, String> {
    let v = ContaminationVector::parse(pattern).map_err(|e| e.to_string())?;
    if v.len() > MAX_TRACE_ITEMS {
        return Err(format!("patterns are limited to {MAX_TRACE_ITEMS} items"));
    }
    let result = execute_scheme(&v, variant(variant_name)?);
    let steps = result
        .trace
        .iter()
        .flat_map(|e| {
            let kind = match e.kind {
                TraceKind::PhysicalTest(TestOutcome::Negative) => STEP_NEGATIVE,
                TraceKind::PhysicalTest(TestOutcome::Positive) => STEP_POSITIVE,
                TraceKind::InferredPositive => STEP_INFERRED,
            };
            [e.group.start as u32, e.group.end as u32, kind]
        })
        .collect();
    Ok(Trace {
        test_count: result.test_count as u32,
        steps,
        contaminated: result.identified_contaminated().into_iter().map(|i| i as u32).collect(),
    })
}

#[wasm_bindgen]
pub fn trace(pattern: &str, variant: &str) -> Result<Trace, JsError> {
    run_trace(pattern, variant).map_err(fail)
}
