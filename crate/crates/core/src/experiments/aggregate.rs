use serde::{Deserialize, Serialize};

use super::config::{Execution, ExperimentConfig, Method};
use super::trial::{run_prepared, Prepared, TrialOutcome, BAYES_STREAM};
use crate::distributions::{bayes_risk_mc, BayesRisk};
use crate::error::{Error, Result};
use crate::rng::derive_stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_risk: f64,
    /// `sd / sqrt(reps)` of the per-repetition error rates.
    pub se: f64,
    pub regret_ratio: Option<f64>,
    pub ratio_se: Option<f64>,
    /// Average selected `k` or `B`.
    pub mean_chosen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub bayes_risk: f64,
    pub bayes_se: f64,
    pub reps: usize,
    pub methods: Vec<MethodSummary>,
    pub trials: Vec<TrialOutcome>,
}

impl ExperimentResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }
}

/// `(mean_m - bayes) / (mean_knn - bayes)`.
pub fn regret_ratio(mean_m: f64, mean_knn: f64, bayes: f64) -> Result<f64> {
    let denom = mean_knn - bayes;
    if !(denom > 0.0) {
        return Err(Error::Nonpositive {
            what: "knn regret",
            value: denom,
        });
    }
    Ok((mean_m - bayes) / denom)
}

/// Delta-method standard error of the regret ratio from paired
/// per-repetition errors `(e_M, e_knn)`.
pub fn delta_se(pairs: &[(f64, f64)], bayes: f64) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::param("pairs", "need at least 2 repetitions"));
    }
    let r = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / r;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / r;
    let ratio = regret_ratio(ma, mb, bayes)?;
    let denom = mb - bayes;
    // centre on the first pair so constant columns give exactly zero
    let (a0, b0) = pairs[0];
    let sa = pairs.iter().map(|p| p.0 - a0).sum::<f64>() / r;
    let sb = pairs.iter().map(|p| p.1 - b0).sum::<f64>() / r;
    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        let (da, db) = (a - a0 - sa, b - b0 - sb);
        saa += da * da;
        sab += da * db;
        sbb += db * db;
    }
    let (saa, sab, sbb) = (saa / (r - 1.0), sab / (r - 1.0), sbb / (r - 1.0));
    let (g0, g1) = (1.0 / denom, -ratio / denom);
    let var = g0 * g0 * saa + 2.0 * g0 * g1 * sab + g1 * g1 * sbb;
    Ok((var.max(0.0) / r).sqrt())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let shift = values.iter().map(|v| v - values[0]).sum::<f64>() / r;
    let var = values
        .iter()
        .map(|v| (v - values[0] - shift).powi(2))
        .sum::<f64>()
        / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Collapses per-repetition outcomes into per-method summaries, adding
/// regret ratios against knn when knn was run and its mean risk exceeds the
/// Bayes risk.
pub fn summarize(outcomes: &[TrialOutcome], methods: &[Method], bayes: f64) -> Result<Vec<MethodSummary>> {
    if outcomes.len() < 2 {
        return Err(Error::param("reps", "need at least 2 repetitions"));
    }
    let column = |m: Method, f: fn(&TrialOutcome) -> &std::collections::BTreeMap<Method, f64>| -> Result<Vec<f64>> {
        outcomes
            .iter()
            .map(|o| {
                f(o).get(&m)
                    .copied()
                    .ok_or_else(|| Error::param("outcomes", format!("repetition {} lacks {m}", o.rep_index)))
            })
            .collect()
    };
    let knn = if methods.contains(&Method::Knn) {
        Some(column(Method::Knn, |o| &o.error_rate)?)
    } else {
        None
    };
    let knn_mean = knn.as_ref().map(|v| mean_and_se(v).0);

    let mut out = Vec::with_capacity(methods.len());
    for &m in methods {
        let errs = column(m, |o| &o.error_rate)?;
        let chosen = column(m, |o| &o.chosen)?;
        let (mean_risk, se) = mean_and_se(&errs);
        let (mut regret_ratio_v, mut ratio_se) = (None, None);
        if let (Some(kv), Some(km)) = (&knn, knn_mean) {
            if m != Method::Knn && km > bayes {
                let pairs: Vec<(f64, f64)> = errs.iter().copied().zip(kv.iter().copied()).collect();
                regret_ratio_v = Some(regret_ratio(mean_risk, km, bayes)?);
                ratio_se = Some(delta_se(&pairs, bayes)?);
            }
        }
        out.push(MethodSummary {
            method: m,
            mean_risk,
            se,
            regret_ratio: regret_ratio_v,
            ratio_se,
            mean_chosen: chosen.iter().sum::<f64>() / chosen.len() as f64,
        });
    }
    Ok(out)
}

/// Runs `f(rep)` for every repetition, in parallel when requested and
/// available. Results are ordered by repetition either way.
pub(crate) fn run_reps<T: Send>(
    reps: usize,
    execution: Execution,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return (0..reps as u64).into_par_iter().map(f).collect();
    }
    let _ = execution;
    (0..reps as u64).map(f).collect()
}

pub(crate) fn bayes_for(config: &ExperimentConfig) -> Result<BayesRisk> {
    let spec = config.distribution()?;
    bayes_risk_mc(&spec, config.bayes_draws, &mut derive_stream(config.master_seed, BAYES_STREAM))
}

/// Runs all repetitions and aggregates them. The Bayes risk is estimated by
/// Monte Carlo on a stream of its own.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let bayes = bayes_for(config)?;
    run_experiment_with_bayes(config, bayes)
}

pub(crate) fn run_experiment_with_bayes(config: &ExperimentConfig, bayes: BayesRisk) -> Result<ExperimentResult> {
    let prepared = Prepared::new(config)?;
    let trials = run_reps(config.reps, config.execution, |rep| run_prepared(&prepared, rep))?;
    let methods = summarize(&trials, &config.methods, bayes.estimate)?;
    Ok(ExperimentResult {
        config: config.clone(),
        bayes_risk: bayes.estimate,
        bayes_se: bayes.se,
        reps: config.reps,
        methods,
        trials,
    })
}
