use serde::{Deserialize, Serialize};

use super::aggregate::{bayes_for, run_experiment_with_bayes};
use super::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::theory::{rate_slope, RateFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    /// Everything but `n`, `methods` and `fixed_b` is taken from here.
    pub base: ExperimentConfig,
    pub method: Method,
    pub n_grid: Vec<usize>,
    /// Applies to the local rules only; knn always cross-validates `k`.
    pub fixed_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub mean_risk: f64,
    pub se: f64,
    pub regret: f64,
    /// Excluded from the fit because the regret estimate was not positive.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub config: RateConfig,
    pub bayes_risk: f64,
    pub points: Vec<RatePoint>,
    /// `None` when fewer than three usable points remain.
    pub fit: Option<RateFit>,
    /// `-4/(d+4)`, the slope expected for the local rules.
    pub reference_slope: f64,
    pub warning: bool,
}

impl RateResult {
    pub fn regrets(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.regret).collect()
    }
}

/// Fits the slope through the positive-regret points, flagging any dropped.
pub fn fit_regrets(points: &mut [RatePoint]) -> (Option<RateFit>, bool) {
    let mut warning = false;
    for p in points.iter_mut() {
        p.dropped = !(p.regret > 0.0);
        warning |= p.dropped;
    }
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.dropped)
        .map(|p| (p.n as f64, p.regret))
        .collect();
    match rate_slope(&kept) {
        Ok(fit) => (Some(fit), warning),
        Err(_) => (None, true),
    }
}

/// Mean regret of one method across a grid of training sizes, with a
/// log-log slope fit. Repetition `r` uses the same streams at every `n`, so
/// training samples are nested and test samples shared across the grid.
pub fn run_rate_experiment(config: &RateConfig) -> Result<RateResult> {
    if config.n_grid.len() < 3 {
        return Err(Error::param("n_grid", "need at least 3 sample sizes"));
    }
    if config.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("n_grid", "must be strictly increasing"));
    }
    let fixed_b = match config.method {
        Method::Knn => None,
        _ => config.fixed_b,
    };
    let bayes = bayes_for(&config.base)?;
    let mut points = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let c = ExperimentConfig {
            n,
            methods: vec![config.method],
            fixed_b,
            ..config.base.clone()
        };
        let result = run_experiment_with_bayes(&c, bayes)?;
        let s = &result.methods[0];
        points.push(RatePoint {
            n,
            mean_risk: s.mean_risk,
            se: s.se,
            regret: s.mean_risk - bayes.estimate,
            dropped: false,
        });
    }
    let (fit, warning) = fit_regrets(&mut points);
    Ok(RateResult {
        config: config.clone(),
        bayes_risk: bayes.estimate,
        points,
        fit,
        reference_slope: -4.0 / (config.base.dim as f64 + 4.0),
        warning,
    })
}
