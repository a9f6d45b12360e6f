//! Candidate grids and k-fold cross-validation for `k` and `B`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classify::{DensityFn, KRule, VoteResult};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbours::nearest_indices;
use crate::rng::RngStream;

pub const DEFAULT_FOLDS: usize = 5;
pub const MAX_K_CANDIDATES: usize = 40;
pub const B_CANDIDATES: usize = 40;

/// Non-empty, strictly increasing list of candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid<T> {
    values: Vec<T>,
}

impl<T: PartialOrd + Copy + Debug> CandidateGrid<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(w) = values.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::param(
                "grid",
                format!("not strictly increasing at {:?}, {:?}", w[0], w[1]),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Candidate `k` values: every integer in `1..=n/4` when that is at most 40
/// values, otherwise 40 equally spaced reals from 1 to `n/4` rounded to the
/// nearest integer (duplicates removed).
pub fn k_grid(n: usize) -> Result<CandidateGrid<usize>> {
    let top = n / 4;
    if top == 0 {
        return Err(Error::param("n", format!("{n} too small for a k grid (need n >= 4)")));
    }
    let mut values: Vec<usize> = if top <= MAX_K_CANDIDATES {
        (1..=top).collect()
    } else {
        let span = (top - 1) as f64;
        let last = (MAX_K_CANDIDATES - 1) as f64;
        (0..MAX_K_CANDIDATES)
            .map(|i| (1.0 + span * i as f64 / last).round() as usize)
            .collect()
    };
    values.dedup();
    CandidateGrid::new(values)
}

/// 40 equally spaced `B` values from `n^{-4/(d+4)}` to `n^{d/(d+4)}` inclusive.
pub fn b_grid(n: usize, d: usize) -> Result<CandidateGrid<f64>> {
    if n < 2 {
        return Err(Error::param("n", "need at least 2"));
    }
    if d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    let nf = n as f64;
    let df = d as f64;
    let lo = nf.powf(-4.0 / (df + 4.0));
    let hi = nf.powf(df / (df + 4.0));
    let last = (B_CANDIDATES - 1) as f64;
    let values = (0..B_CANDIDATES)
        .map(|i| {
            if i == B_CANDIDATES - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / last
            }
        })
        .collect();
    CandidateGrid::new(values)
}

/// Shuffles `0..n` once and cuts it into `folds` contiguous blocks whose
/// sizes differ by at most one (the first `n % folds` blocks are larger).
pub fn fold_partition(n: usize, folds: usize, rng: &mut RngStream) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::param("folds", "need at least 2"));
    }
    if folds > n {
        return Err(Error::param("folds", format!("{folds} folds exceed {n} samples")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(perm[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult<T> {
    pub best: T,
    pub candidates: Vec<T>,
    /// `fold_errors[c][f]`: misclassification rate of candidate `c` on fold `f`.
    pub fold_errors: Vec<Vec<f64>>,
    pub mean_error: Vec<f64>,
}

impl<T: Copy> CvResult<T> {
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (c, &e) in self.mean_error.iter().enumerate() {
            if e < self.mean_error[best] {
                best = c;
            }
        }
        best
    }
}

/// Picks the candidate with the smallest mean held-out error; ties go to the
/// smallest candidate.
///
/// Each held-out point is classified by a classifier built on the other
/// folds, so local rules see `n` equal to the training-fold size and constant
/// `k` values larger than that are clamped to it. Candidates sharing a density
/// evaluator (same `Arc`) evaluate it once per held-out point, and the
/// neighbour ordering is computed once per point up to the largest `k` any
/// candidate asks for.
pub fn cv_select<T, F>(
    train: &Dataset,
    grid: &CandidateGrid<T>,
    rule_factory: F,
    folds: usize,
    rng: &mut RngStream,
) -> Result<CvResult<T>>
where
    T: PartialOrd + Copy + Debug,
    F: Fn(T) -> Result<KRule>,
{
    let partition = fold_partition(train.len(), folds, rng)?;
    let rules: Vec<KRule> = grid.values().iter().map(|&c| rule_factory(c)).collect::<Result<_>>()?;

    let mut evaluators: Vec<Arc<dyn DensityFn>> = Vec::new();
    let slots: Vec<Option<usize>> = rules
        .iter()
        .map(|r| {
            r.density().map(|f| {
                match evaluators.iter().position(|g| Arc::ptr_eq(g, f)) {
                    Some(i) => i,
                    None => {
                        evaluators.push(Arc::clone(f));
                        evaluators.len() - 1
                    }
                }
            })
        })
        .collect();

    let d = train.dim();
    let mut fold_errors = vec![vec![0.0; folds]; rules.len()];
    let mut in_fold = vec![false; train.len()];
    let mut ks = vec![0usize; rules.len()];
    let mut values = vec![0.0; evaluators.len()];
    let mut ones_prefix = Vec::new();

    for (f, held) in partition.iter().enumerate() {
        in_fold.iter_mut().for_each(|b| *b = false);
        held.iter().for_each(|&i| in_fold[i] = true);
        let keep: Vec<usize> = (0..train.len()).filter(|&i| !in_fold[i]).collect();
        let sub = train.select(&keep);
        let n_sub = sub.len();

        let mut errors = vec![0usize; rules.len()];
        for &i in held {
            let x = train.point(i);
            for (v, g) in values.iter_mut().zip(&evaluators) {
                *v = g.density(x);
            }
            for ((k, rule), slot) in ks.iter_mut().zip(&rules).zip(&slots) {
                let value = slot.map_or(0.0, |s| values[s]);
                *k = rule.k_for_density(value, n_sub, d)?;
            }
            let k_max = ks.iter().copied().max().unwrap_or(1);
            ones_prefix.clear();
            ones_prefix.push(0usize);
            for j in nearest_indices(sub.points(), x, k_max) {
                let last = *ones_prefix.last().unwrap_or(&0);
                ones_prefix.push(last + usize::from(sub.label(j) == 1));
            }
            let truth = train.label(i);
            for (c, &k) in ks.iter().enumerate() {
                if VoteResult::from_count(ones_prefix[k], k).label != truth {
                    errors[c] += 1;
                }
            }
        }
        for (c, e) in errors.into_iter().enumerate() {
            fold_errors[c][f] = e as f64 / held.len() as f64;
        }
    }

    let mean_error: Vec<f64> = fold_errors
        .iter()
        .map(|row| row.iter().sum::<f64>() / folds as f64)
        .collect();
    let mut result = CvResult {
        best: grid.values()[0],
        candidates: grid.values().to_vec(),
        fold_errors,
        mean_error,
    };
    result.best = result.candidates[result.best_index()];
    Ok(result)
}
