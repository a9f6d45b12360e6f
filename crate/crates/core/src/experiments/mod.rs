//! Monte Carlo benchmark harness.
//!
//! Every repetition draws its samples from streams keyed by the master seed
//! and the repetition index, so results do not depend on how repetitions
//! are scheduled.

mod aggregate;
mod check;
mod config;
mod io;
mod rate;
mod trial;

pub use aggregate::{delta_se, regret_ratio, run_experiment, summarize, ExperimentResult, MethodSummary};
pub use check::{kde_check, KdeCheck};
pub use config::{
    parse_methods, BandwidthPolicy, Execution, ExperimentConfig, Method, DEFAULT_BAYES_DRAWS,
};
pub use io::{
    rate_csv, read_results_json, results_csv, sig6, write_rate_results, write_results, OutputFormat,
};
pub use rate::{fit_regrets, run_rate_experiment, RateConfig, RatePoint, RateResult};
pub use trial::{run_trial, TrialOutcome};

use crate::distributions::{bayes_risk_mc, BayesRisk, DistributionSpec};
use crate::error::Result;
use crate::rng::derive_stream;

/// Monte Carlo Bayes risk on the stream experiments reserve for it.
pub fn bayes_risk(spec: &DistributionSpec, draws: usize, seed: u64) -> Result<BayesRisk> {
    bayes_risk_mc(spec, draws, &mut derive_stream(seed, trial::BAYES_STREAM))
}
