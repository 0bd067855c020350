//! Regime sweep rows and their CSV / JSON encodings.

use std::io::Write;
use std::path::{Path, PathBuf};

use bsgt_core::asymptotics::{convergence_table, RegimeSpec, TABLE_EXPONENTS};
use bsgt_core::{ExactAnalyzer, Prevalence};
use serde::Serialize;

use crate::cli::{Format, Output, SweepArgs};
use crate::Failure;

pub const CSV_HEADER: [&str; 10] = [
    "n",
    "N",
    "p",
    "mean_exact",
    "mean_pred",
    "mean_ratio",
    "prop1a_residual",
    "var_exact",
    "var_pred",
    "var_ratio",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub n: u32,
    #[serde(rename = "N")]
    pub n_items: u64,
    pub p: f64,
    pub mean_exact: Option<f64>,
    pub mean_pred: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub prop1a_residual: Option<f64>,
    pub var_exact: Option<f64>,
    pub var_pred: Option<f64>,
    pub var_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct Meta {
    regime: Regime,
    seed: Option<u64>,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct Regime {
    a: f64,
    beta: f64,
}

#[derive(Debug, Serialize)]
struct Document<'a> {
    meta: Meta,
    rows: &'a [Row],
}

pub fn rows(args: &SweepArgs) -> Result<Vec<Row>, Failure> {
    if args.n_min > args.n_max {
        return Err(Failure::Validation(format!("empty exponent range {}..={}", args.n_min, args.n_max)));
    }
    if !TABLE_EXPONENTS.contains(&args.n_min) || !TABLE_EXPONENTS.contains(&args.n_max) {
        return Err(Failure::Validation(format!(
            "exponents must lie in {}..={}",
            TABLE_EXPONENTS.start(),
            TABLE_EXPONENTS.end()
        )));
    }
    let spec = RegimeSpec::new(args.a, args.beta)?;
    let want = |o: Output| args.outputs.contains(&o);
    let table = convergence_table(&spec, args.n_min..=args.n_max, args.delta)?;
    table
        .into_iter()
        .map(|r| {
            let mean = want(Output::Mean).then_some(&r.mean);
            let var = r.variance.as_ref().filter(|_| want(Output::Variance));
            let pmf = if want(Output::Pmf) {
                let prev = Prevalence::from_p(r.p)?;
                Some(ExactAnalyzer::new(prev).pmf(r.n_items)?.weights().to_vec())
            } else {
                None
            };
            Ok(Row {
                n: r.n,
                n_items: r.n_items,
                p: r.p,
                mean_exact: mean.map(|m| m.exact_value),
                mean_pred: mean.map(|m| m.predicted),
                mean_ratio: mean.map(|m| m.ratio),
                prop1a_residual: r.mean_offset.filter(|_| mean.is_some()),
                var_exact: var.map(|v| v.exact_value),
                var_pred: var.map(|v| v.predicted),
                var_ratio: var.map(|v| v.ratio),
                pmf,
            })
        })
        .collect()
}

/// 17 significant digits, which recovers every `f64` exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), Failure> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.n_items.to_string(),
            fmt_float(r.p),
            cell(r.mean_exact),
            cell(r.mean_pred),
            cell(r.mean_ratio),
            cell(r.prop1a_residual),
            cell(r.var_exact),
            cell(r.var_pred),
            cell(r.var_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format PMF table: `n,N,t,prob`, one line per test count.
pub fn write_pmf_csv<W: Write>(rows: &[Row], out: W) -> Result<(), Failure> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["n", "N", "t", "prob"])?;
    for r in rows {
        for (t, &prob) in r.pmf.iter().flatten().enumerate().filter(|(_, &w)| w > 0.0) {
            w.write_record([r.n.to_string(), r.n_items.to_string(), t.to_string(), fmt_float(prob)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(args: &SweepArgs, rows: &[Row], mut out: W) -> Result<(), Failure> {
    let doc = Document {
        meta: Meta {
            regime: Regime { a: args.a, beta: args.beta },
            // Sweeps are exact; there is nothing to seed.
            seed: None,
            version: env!("CARGO_PKG_VERSION"),
        },
        rows,
    };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Failure::Computation(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// `sweep.csv` -> `sweep.pmf.csv`.
pub fn pmf_path(out: &Path) -> PathBuf {
    out.with_extension("pmf.csv")
}

pub fn run(args: &SweepArgs) -> Result<(), Failure> {
    let pmf_csv = args.format == Format::Csv && args.outputs.contains(&Output::Pmf);
    if pmf_csv && args.out.is_none() {
        return Err(Failure::Validation("CSV with pmf output needs --out (the PMF goes to a second file)".into()));
    }
    let rows = rows(args)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => write_csv(&rows, &mut buf)?,
        Format::Json => write_json(args, &rows, &mut buf)?,
    }
    match &args.out {
        Some(path) => {
            write_file(path, &buf)?;
            if pmf_csv {
                let mut pmf = Vec::new();
                write_pmf_csv(&rows, &mut pmf)?;
                write_file(&pmf_path(path), &pmf)?;
            }
        }
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Computation(format!("cannot write {}: {e}", path.display())))
}
