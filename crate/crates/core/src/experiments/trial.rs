use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{BandwidthPolicy, ExperimentConfig, Method};
use crate::classify::{classify_points, DensityFn, KRule};
use crate::data::{Dataset, PointSet};
use crate::density::{bandwidth_reference, bandwidth_theoretical, sup_estimate, KdeModel};
use crate::distributions::{sample_labelled, sample_unlabelled, ClassModel, DistributionSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, RngStream};
use crate::select::{b_grid, cv_select, k_grid};

/// Streams per repetition; purpose `p` of repetition `r` is stream `16 r + p`.
const STREAMS_PER_REP: u64 = 16;

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Purpose {
    Train = 0,
    Unlabelled = 1,
    Test = 2,
    Folds = 3,
}

pub(crate) fn stream_for(seed: u64, rep: u64, purpose: Purpose) -> RngStream {
    derive_stream(seed, rep * STREAMS_PER_REP + purpose as u64)
}

/// Stream reserved for the Bayes-risk Monte Carlo.
pub(crate) const BAYES_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub rep_index: u64,
    /// Test misclassification rate per method.
    pub error_rate: BTreeMap<Method, f64>,
    /// Selected `k` (knn) or `B` (local rules) per method.
    pub chosen: BTreeMap<Method, f64>,
}

/// Per-experiment state shared by every repetition.
pub(crate) struct Prepared {
    pub config: ExperimentConfig,
    pub spec: Arc<DistributionSpec>,
    pub density_sup: f64,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.distribution()?;
        let density_sup = if config.methods.contains(&Method::Oracle) {
            spec.density_sup()
        } else {
            f64::NAN
        };
        Ok(Self {
            config: config.clone(),
            spec: Arc::new(spec),
            density_sup,
        })
    }
}

struct TrueMarginal(Arc<DistributionSpec>);

impl DensityFn for TrueMarginal {
    fn density(&self, x: &[f64]) -> f64 {
        self.0.marginal_at(x)
    }
}

/// Runs one repetition: fresh training, unlabelled and test samples, then
/// each configured method with its tuning parameter chosen by
/// cross-validation on the training sample.
pub fn run_trial(config: &ExperimentConfig, rep_index: u64) -> Result<TrialOutcome> {
    let prepared = Prepared::new(config)?;
    run_prepared(&prepared, rep_index)
}

pub(crate) fn run_prepared(p: &Prepared, rep: u64) -> Result<TrialOutcome> {
    trial_body(p, rep).map_err(|e| Error::Trial {
        rep,
        source: Box::new(e),
    })
}

fn trial_body(p: &Prepared, rep: u64) -> Result<TrialOutcome> {
    let c = &p.config;
    let spec: &DistributionSpec = &p.spec;
    let seed = c.master_seed;
    let d = c.dim;

    let (train_pts, train_labels) = sample_labelled(spec, c.n, &mut stream_for(seed, rep, Purpose::Train))?;
    let train = Dataset::new(train_pts, train_labels)?;
    let (test_pts, test_labels) = sample_labelled(spec, c.test_size, &mut stream_for(seed, rep, Purpose::Test))?;
    let folds_stream = || stream_for(seed, rep, Purpose::Folds);

    let mut error_rate = BTreeMap::new();
    let mut chosen = BTreeMap::new();
    for &method in &c.methods {
        let (rule, param) = match method {
            Method::Knn => {
                let cv = cv_select(&train, &k_grid(c.n)?, KRule::constant, c.folds, &mut folds_stream())?;
                (KRule::constant(cv.best)?, cv.best as f64)
            }
            Method::Oracle => {
                let density: Arc<dyn DensityFn> = Arc::new(TrueMarginal(Arc::clone(&p.spec)));
                local_rule(c, &train, density, p.density_sup, &mut folds_stream())?
            }
            Method::Ss => {
                let unlabelled = sample_unlabelled(spec, c.m, &mut stream_for(seed, rep, Purpose::Unlabelled))?;
                let kde = fit_kde(unlabelled, c.bandwidth, d)?;
                let sup = sup_estimate(&kde, kde.points())?;
                let density: Arc<dyn DensityFn> = Arc::new(kde);
                local_rule(c, &train, density, sup, &mut folds_stream())?
            }
        };
        let votes = classify_points(&train, &test_pts, &rule)?;
        let wrong = votes
            .iter()
            .zip(&test_labels)
            .filter(|(v, &y)| v.label != y)
            .count();
        error_rate.insert(method, wrong as f64 / c.test_size as f64);
        chosen.insert(method, param);
    }
    Ok(TrialOutcome {
        rep_index: rep,
        error_rate,
        chosen,
    })
}

fn local_rule(
    c: &ExperimentConfig,
    train: &Dataset,
    density: Arc<dyn DensityFn>,
    sup: f64,
    folds: &mut RngStream,
) -> Result<(KRule, f64)> {
    let b = match c.fixed_b {
        Some(b) => b,
        None => {
            let factory = |b: f64| KRule::practical(b, Arc::clone(&density), sup);
            cv_select(train, &b_grid(c.n, c.dim)?, factory, c.folds, folds)?.best
        }
    };
    Ok((KRule::practical(b, density, sup)?, b))
}

pub(crate) fn fit_kde(points: PointSet, policy: BandwidthPolicy, d: usize) -> Result<KdeModel> {
    let bandwidths = match policy {
        BandwidthPolicy::Reference => bandwidth_reference(&points)?,
        BandwidthPolicy::Theoretical { a, gamma } => vec![bandwidth_theoretical(a, points.len(), d, gamma)?; d],
    };
    KdeModel::new(points, bandwidths)
}
