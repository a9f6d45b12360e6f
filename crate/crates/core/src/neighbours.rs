//! Exact Euclidean nearest-neighbour orderings.
//!
//! Candidates are ranked by `(squared distance, training index)`, compared
//! with `f64::total_cmp`, so equidistant points come out in ascending index
//! order and the result never depends on the sort algorithm.

use std::cmp::Ordering;

use crate::data::{Dataset, PointSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourOrdering {
    /// Training indices, nearest first.
    pub indices: Vec<usize>,
    /// Euclidean distances matching `indices`; nondecreasing.
    pub distances: Vec<f64>,
}

impl NeighbourOrdering {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest `(squared distance, index)` pairs in order. Assumes
/// `1 <= k <= points.len()` and a matching query dimension.
pub(crate) fn nearest_keys(points: &PointSet, query: &[f64], k: usize) -> Vec<(f64, usize)> {
    let mut keys: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (squared_distance(p, query), i))
        .collect();
    if k < keys.len() {
        keys.select_nth_unstable_by(k - 1, by_distance_then_index);
        keys.truncate(k);
    }
    keys.sort_unstable_by(by_distance_then_index);
    keys
}

/// Indices of the `k` nearest points; same contract as [`nearest_keys`].
pub(crate) fn nearest_indices(points: &PointSet, query: &[f64], k: usize) -> Vec<usize> {
    nearest_keys(points, query, k).into_iter().map(|(_, i)| i).collect()
}

fn into_ordering(keys: Vec<(f64, usize)>) -> NeighbourOrdering {
    let (distances, indices) = keys.into_iter().map(|(d2, i)| (d2.sqrt(), i)).unzip();
    NeighbourOrdering { indices, distances }
}

/// All training points ordered by distance to `query`.
pub fn full_ordering(train: &Dataset, query: &[f64]) -> Result<NeighbourOrdering> {
    train.points().check_query(query)?;
    Ok(into_ordering(nearest_keys(train.points(), query, train.len())))
}

/// The first `k` entries of [`full_ordering`], without sorting the rest.
pub fn k_nearest(train: &Dataset, query: &[f64], k: usize) -> Result<NeighbourOrdering> {
    train.points().check_query(query)?;
    if k == 0 || k > train.len() {
        return Err(Error::KOutOfRange { k, n: train.len() });
    }
    Ok(into_ordering(nearest_keys(train.points(), query, k)))
}
