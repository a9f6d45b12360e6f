//! Vote statistic and local-k selection rules.

use std::fmt;
use std::sync::Arc;

use crate::data::{Dataset, Label, PointSet};
use crate::error::{Error, Result};
use crate::neighbours::nearest_indices;

/// A density evaluator `x -> f(x)`. Must be callable from many threads.
pub trait DensityFn: Send + Sync {
    fn density(&self, x: &[f64]) -> f64;
}

impl<F> DensityFn for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn density(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// How many neighbours to consult at a query point.
#[derive(Clone)]
pub enum KRule {
    /// The same `k` everywhere.
    Constant(usize),
    /// `max[ceil((n-1)^beta), min{floor(B (f(x)(n-1))^{4/(d+4)}), floor((n-1)^{1-beta})}]`
    /// driven by the true marginal density.
    TheoreticalLocal {
        b: f64,
        beta: f64,
        density: Arc<dyn DensityFn>,
    },
    /// `max[1, min{floor(B (f(x) n / sup f)^{4/(d+4)}), floor(n/2)}]`, the
    /// clamped form used with cross-validated `B`.
    PracticalLocal {
        b: f64,
        density: Arc<dyn DensityFn>,
        density_sup: f64,
    },
}

impl fmt::Debug for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Constant(k) => f.debug_tuple("Constant").field(k).finish(),
            KRule::TheoreticalLocal { b, beta, .. } => f
                .debug_struct("TheoreticalLocal")
                .field("b", b)
                .field("beta", beta)
                .finish_non_exhaustive(),
            KRule::PracticalLocal { b, density_sup, .. } => f
                .debug_struct("PracticalLocal")
                .field("b", b)
                .field("density_sup", density_sup)
                .finish_non_exhaustive(),
        }
    }
}

impl KRule {
    pub fn constant(k: usize) -> Result<Self> {
        let rule = KRule::Constant(k);
        rule.validate()?;
        Ok(rule)
    }

    pub fn theoretical(b: f64, beta: f64, density: Arc<dyn DensityFn>) -> Result<Self> {
        let rule = KRule::TheoreticalLocal { b, beta, density };
        rule.validate()?;
        Ok(rule)
    }

    pub fn practical(b: f64, density: Arc<dyn DensityFn>, density_sup: f64) -> Result<Self> {
        let rule = KRule::PracticalLocal {
            b,
            density,
            density_sup,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KRule::Constant(0) => Err(Error::param("k", "must be at least 1")),
            KRule::Constant(_) => Ok(()),
            KRule::TheoreticalLocal { b, beta, .. } => {
                check_positive("B", b)?;
                if !(beta > 0.0 && beta < 0.5) {
                    return Err(Error::param("beta", format!("{beta} not in (0, 1/2)")));
                }
                Ok(())
            }
            KRule::PracticalLocal { b, density_sup, .. } => {
                check_positive("B", b)?;
                check_positive("density_sup", density_sup)
            }
        }
    }

    /// The density evaluator driving the rule, if any.
    pub fn density(&self) -> Option<&Arc<dyn DensityFn>> {
        match self {
            KRule::Constant(_) => None,
            KRule::TheoreticalLocal { density, .. } | KRule::PracticalLocal { density, .. } => {
                Some(density)
            }
        }
    }

    /// Resolves `k` given an already evaluated density value (ignored by
    /// [`KRule::Constant`]). Lets callers evaluate an expensive density once
    /// and reuse it across many rules sharing the evaluator.
    pub fn k_for_density(&self, density_value: f64, n: usize, d: usize) -> Result<usize> {
        self.validate()?;
        if d == 0 {
            return Err(Error::param("d", "must be at least 1"));
        }
        match *self {
            KRule::Constant(k) => {
                if n == 0 {
                    return Err(Error::param("n", "must be at least 1"));
                }
                Ok(k.clamp(1, n))
            }
            KRule::TheoreticalLocal { b, beta, .. } => {
                check_local_inputs(density_value, n)?;
                let nm1 = (n - 1) as f64;
                let lower = ceil_snapped(nm1.powf(beta));
                let upper = floor_snapped(nm1.powf(1.0 - beta));
                let mid = floor_snapped(b * (density_value * nm1).powf(4.0 / (d as f64 + 4.0)));
                Ok(lower.max(mid.min(upper)) as usize)
            }
            KRule::PracticalLocal { b, density_sup, .. } => {
                check_local_inputs(density_value, n)?;
                let nf = n as f64;
                let mid = floor_snapped(
                    b * (density_value * nf / density_sup).powf(4.0 / (d as f64 + 4.0)),
                );
                let upper = (n / 2) as f64;
                Ok(1.0f64.max(mid.min(upper)) as usize)
            }
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} is not a positive finite number")))
    }
}

fn check_local_inputs(density_value: f64, n: usize) -> Result<()> {
    if !density_value.is_finite() {
        return Err(Error::NonFiniteDensity(density_value));
    }
    if density_value < 0.0 {
        return Err(Error::param("density", format!("negative value {density_value}")));
    }
    if n < 2 {
        return Err(Error::param("n", "local rules need at least 2 training points"));
    }
    Ok(())
}

// Values within a few ulps of an integer are treated as that integer, so
// that e.g. 256^{3/4} evaluated as 63.99999999999999 floors to 64.
const SNAP_TOL: f64 = 1e-9;

fn snapped(v: f64) -> Option<f64> {
    let r = v.round();
    ((v - r).abs() <= SNAP_TOL * r.abs().max(1.0)).then_some(r)
}

fn floor_snapped(v: f64) -> f64 {
    snapped(v).unwrap_or_else(|| v.floor())
}

fn ceil_snapped(v: f64) -> f64 {
    snapped(v).unwrap_or_else(|| v.ceil())
}

/// Resolves the neighbourhood size at `x` for a training set of size `n` in
/// dimension `d`.
pub fn resolve_k(rule: &KRule, x: &[f64], n: usize, d: usize) -> Result<usize> {
    let value = match rule.density() {
        Some(f) => f.density(x),
        None => 0.0,
    };
    rule.k_for_density(value, n, d)
}

/// Fraction of label-1 entries among the first `k` ordered labels.
pub fn vote_fraction(ordered_labels: &[Label], k: usize) -> Result<f64> {
    if k == 0 || k > ordered_labels.len() {
        return Err(Error::KOutOfRange {
            k,
            n: ordered_labels.len(),
        });
    }
    let ones = ordered_labels[..k].iter().filter(|&&l| l == 1).count();
    Ok(ones as f64 / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteResult {
    pub score: f64,
    pub k_used: usize,
    pub label: Label,
}

impl VoteResult {
    /// Builds the result from an exact count; the `>= 1/2` test is done on
    /// integers (`2 * ones >= k`) so the tie never depends on rounding.
    pub(crate) fn from_count(ones: usize, k: usize) -> Self {
        Self {
            score: ones as f64 / k as f64,
            k_used: k,
            label: Label::from(2 * ones >= k),
        }
    }
}

/// Classifies `query` by a vote over its `k_L(query)` nearest training points.
pub fn classify(train: &Dataset, query: &[f64], rule: &KRule) -> Result<VoteResult> {
    train.points().check_query(query)?;
    let k = resolve_k(rule, query, train.len(), train.dim())?;
    Ok(vote_with_k(train, query, k))
}

pub(crate) fn vote_with_k(train: &Dataset, query: &[f64], k: usize) -> VoteResult {
    let ones = nearest_indices(train.points(), query, k)
        .into_iter()
        .filter(|&i| train.label(i) == 1)
        .count();
    VoteResult::from_count(ones, k)
}

/// Classifies every point of `queries`.
pub fn classify_points(train: &Dataset, queries: &PointSet, rule: &KRule) -> Result<Vec<VoteResult>> {
    if queries.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: queries.dim(),
        });
    }
    queries.iter().map(|q| classify(train, q, rule)).collect()
}
