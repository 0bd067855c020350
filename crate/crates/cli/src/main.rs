mod cli;
mod config;
mod sweep;

use std::fmt::Display;
use std::process::ExitCode;

use bsgt_core::asymptotics::RegimeSpec;
use bsgt_core::closed_form::{mean_closed_form_pow2_with, variance_closed_form_pow2_with};
use bsgt_core::montecarlo::{histogram_t_over_log_n, simulate, SimConfig};
use bsgt_core::verify::{self, VerifyOptions};
use bsgt_core::ExactAnalyzer;
use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command, ExactArgs, HistogramArgs, SimulateArgs, VerifyArgs};

/// Everything that ends a run early, by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1.
    Validation(String),
    /// Exit 2.
    Computation(String),
    /// Exit 3.
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Computation(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Computation(m) => write!(f, "computation failed: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<bsgt_core::Error> for Failure {
    fn from(e: bsgt_core::Error) -> Self {
        use bsgt_core::Error::*;
        match e {
            InvalidInput(_) | Domain(_) => Failure::Validation(e.to_string()),
            ResourceLimit(_) | UnsupportedRegime(_) => Failure::Computation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Computation(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Computation(e.to_string())
    }
}

fn row(key: &str, value: impl Display) {
    println!("{key:<16}{value}");
}

/// Shortest round-trip form, in scientific notation when very small or large.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn exact(args: &ExactArgs) -> Result<(), Failure> {
    let (prev, clamped) = args.prevalence.resolve(args.n_items)?;
    if clamped {
        eprintln!("note: a N^-beta exceeds 1 at N = {}; using p = 1", args.n_items);
    }
    let mut analyzer = ExactAnalyzer::with_variant(prev, args.variant.into());
    let m = analyzer.moments(args.n_items)?;
    row("N", args.n_items);
    row("p", num(prev.p()));
    row("q", num(prev.q()));
    row("variant", bsgt_core::SchemeVariant::from(args.variant).name());
    row("mean", num(m.mean));
    row("second_moment", num(m.second_moment));
    row("variance", num(m.variance));
    if args.pow2_closed_form {
        if !args.n_items.is_power_of_two() {
            return Err(Failure::Validation(format!("--pow2-closed-form needs a power of two, got N = {}", args.n_items)));
        }
        let n = args.n_items.trailing_zeros();
        let cf = mean_closed_form_pow2_with(n, prev)?;
        let cv = variance_closed_form_pow2_with(n, prev)?;
        row("mean_closed", num(cf.sum_form));
        if let Some(split) = cf.split_form {
            row("mean_closed_alt", num(split));
        }
        row("mean_diff", num(cf.value() - m.mean));
        row("var_closed", num(cv.variance()));
        row("var_closed_alt", num(cv.first_decomposition()));
        row("var_diff", num(cv.variance() - m.variance));
    }
    if args.pmf {
        let pmf = analyzer.pmf(args.n_items)?;
        println!("t,prob");
        for (t, p) in pmf.support() {
            println!("{t},{}", sweep::fmt_float(p));
        }
    }
    Ok(())
}

fn simulate_cmd(args: &SimulateArgs) -> Result<(), Failure> {
    let (prev, clamped) = args.prevalence.resolve(args.n_items)?;
    if clamped {
        eprintln!("note: a N^-beta exceeds 1 at N = {}; using p = 1", args.n_items);
    }
    let cfg = SimConfig::new(args.n_items, prev, args.reps, args.seed).with_workers(args.workers);
    let est = simulate(&cfg)?;
    let exact = ExactAnalyzer::new(prev).moments(args.n_items)?;
    row("N", args.n_items);
    row("p", num(prev.p()));
    row("reps", est.reps);
    row("seed", args.seed);
    row("mean", num(est.mean));
    row("variance", num(est.variance));
    row("std_error", num(est.std_error));
    row("ci95", format!("{} {}", num(est.ci95.0), num(est.ci95.1)));
    row("exact_mean", num(exact.mean));
    row("exact_variance", num(exact.variance));
    row("z_score", num(est.z_score(exact.mean)));
    Ok(())
}

fn histogram(args: &HistogramArgs) -> Result<(), Failure> {
    let spec = RegimeSpec::new(args.a, args.beta)?;
    let h = histogram_t_over_log_n(&spec, args.n_items, args.reps, args.seed, args.bins)?;
    let mut table = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    table.write_record(["lo", "hi", "count"])?;
    for (i, count) in h.counts.iter().enumerate() {
        table.write_record([sweep::fmt_float(h.edges[i]), sweep::fmt_float(h.edges[i + 1]), count.to_string()])?;
    }
    let table = table.into_inner().map_err(|e| Failure::Computation(e.to_string()))?;
    row("N", args.n_items);
    row("reps", h.total());
    row("seed", args.seed);
    row("mean", num(h.mean));
    row("min", num(h.min));
    row("max", num(h.max));
    row("all_positive", h.all_positive);
    match &args.out {
        Some(path) => std::fs::write(path, table)
            .map_err(|e| Failure::Computation(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", String::from_utf8_lossy(&table)),
    }
    Ok(())
}

fn verify_cmd(args: &VerifyArgs) -> Result<(), Failure> {
    if !(1..=bsgt_core::scheme::MAX_ENUMERATION_ITEMS).contains(&args.max_oracle_n) {
        return Err(Failure::Validation(format!(
            "--max-oracle-n must be in 1..={}",
            bsgt_core::scheme::MAX_ENUMERATION_ITEMS
        )));
    }
    let opts = VerifyOptions {
        max_oracle_n: args.max_oracle_n,
        closed_form_variant: args.closed_form_variant.into(),
        lemma_draws: args.lemma_draws,
        seed: args.seed,
    };
    let report = verify::run(&opts);
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        Err(Failure::Verification(failed.join(", ")))
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Exact(a) => exact(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Histogram(a) => histogram(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
