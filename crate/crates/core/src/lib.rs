//! Binary search group testing.
//!
//! A population of `N` items, each contaminated independently with
//! probability `p`, is screened by pooled tests that split positive groups in
//! half. This crate runs the scheme on concrete patterns ([`scheme`]),
//! computes the exact distribution of the number of tests `T(N)`
//! ([`exact`], [`closed_form`]), evaluates its large-`N` laws when the
//! prevalence shrinks as `a N^-beta` ([`asymptotics`]) and estimates it by
//! simulation ([`montecarlo`]). [`verify`] bundles the cross-checks.

pub mod asymptotics;
pub mod closed_form;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod pmf;
pub mod prob;
pub mod scheme;
pub mod stream;
pub mod verify;

pub use error::{Error, Result};
pub use exact::{mean_exact, pgf_eval, pmf_exact, variance_exact, ExactAnalyzer, MomentSummary};
pub use pmf::Pmf;
pub use prob::Prevalence;
pub use scheme::{
    enumerate_distribution, execute_scheme, ContaminationVector, SchemeResult, SchemeVariant,
};
