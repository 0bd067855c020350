use std::path::PathBuf;

use bsgt_core::asymptotics::RegimeSpec;
use bsgt_core::{Prevalence, SchemeVariant};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "bsgt", version, about = "Binary-search group testing: exact analysis, simulation and regime sweeps")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file; its entries act as flags placed before the
    /// command-line ones, so explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact distribution of the test count for one population.
    Exact(ExactArgs),
    /// Monte Carlo estimate of the mean test count.
    Simulate(SimulateArgs),
    /// Exact moments against the asymptotic laws for N = 2^n.
    Sweep(SweepArgs),
    /// Sampled distribution of T(N) / ln N in the p = a/N regime.
    Histogram(HistogramArgs),
    /// Oracle, identity and bound checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("prevalence").required(true).args(["q", "p", "a"])))]
pub struct PrevalenceArgs {
    /// Probability that an item is clean.
    #[arg(long)]
    pub q: Option<f64>,
    /// Probability that an item is contaminated.
    #[arg(long)]
    pub p: Option<f64>,
    /// Regime coefficient in p = a N^-beta.
    #[arg(long, requires = "beta")]
    pub a: Option<f64>,
    /// Regime exponent in p = a N^-beta.
    #[arg(long, requires = "a")]
    pub beta: Option<f64>,
}

impl PrevalenceArgs {
    /// Prevalence at population size `n_items`, and whether the regime value
    /// had to be clamped to 1.
    pub fn resolve(&self, n_items: u64) -> Result<(Prevalence, bool), Failure> {
        match (self.q, self.p, self.a, self.beta) {
            (Some(q), None, None, _) => Ok((Prevalence::from_q(q)?, false)),
            (None, Some(p), None, _) => Ok((Prevalence::from_p(p)?, false)),
            (None, None, Some(a), Some(beta)) => {
                let point = RegimeSpec::new(a, beta)?.prevalence(n_items)?;
                Ok((point.prevalence, point.clamped))
            }
            _ => Err(Failure::Validation("give exactly one of --q, --p or --a with --beta".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Population size.
    #[arg(long = "N", value_name = "N")]
    pub n_items: u64,
    #[command(flatten)]
    pub prevalence: PrevalenceArgs,
    /// Also print the probability of each test count.
    #[arg(long)]
    pub pmf: bool,
    /// Compare with the closed forms (N must be a power of two).
    #[arg(long)]
    pub pow2_closed_form: bool,
    #[arg(long, value_enum, default_value_t = Variant::Lazy)]
    pub variant: Variant,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "N", value_name = "N")]
    pub n_items: u64,
    #[command(flatten)]
    pub prevalence: PrevalenceArgs,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; the estimate does not depend on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Mean,
    Variance,
    Pmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub beta: f64,
    /// Smallest exponent n (N = 2^n).
    #[arg(long, default_value_t = 1)]
    pub n_min: u32,
    /// Largest exponent n.
    #[arg(long, default_value_t = 30)]
    pub n_max: u32,
    /// Slack in the beta < 1 mean bound.
    #[arg(long, default_value_t = bsgt_core::asymptotics::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Output::Mean, Output::Variance])]
    pub outputs: Vec<Output>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Destination file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long = "N", value_name = "N")]
    pub n_items: u64,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    /// Write the bins as CSV (`lo,hi,count`) here instead of printing them.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Lazy,
    Naive,
}

impl From<Variant> for SchemeVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Lazy => SchemeVariant::PaperLazy,
            Variant::Naive => SchemeVariant::NaiveBothHalves,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Largest N compared with exhaustive enumeration (1..=20).
    #[arg(long, default_value_t = 12)]
    pub max_oracle_n: usize,
    /// Scheme bound to the closed-form checks; `naive` should fail them.
    #[arg(long, value_enum, default_value_t = Variant::Lazy)]
    pub closed_form_variant: Variant,
    #[arg(long, default_value_t = 100_000)]
    pub lemma_draws: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}
