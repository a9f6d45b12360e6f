//! Labelled and unlabelled sample containers.
//!
//! Points are stored row-major in one flat buffer so neighbour scans and
//! density sums walk contiguous memory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label. Stored as an integer so the on-disk formats survive a later
/// move to more than two classes; only 0 and 1 are accepted today.
pub type Label = u8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Label,
}

/// An ordered set of points sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInput)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::param("dim", "points must have at least one coordinate"));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    /// Builds a point set from a row-major buffer of `coords.len() / dim` points.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        Ok(Self { dim, coords })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    /// Concatenation of two point sets of equal dimension.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Self {
            dim: self.dim,
            coords,
        })
    }

    pub(crate) fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        Ok(())
    }
}

/// Labelled training data in insertion order. The order is the tie-breaker
/// for equidistant neighbours, so it is never permuted internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: PointSet,
    labels: Vec<Label>,
}

/// Builds a [`Dataset`] from parallel lists of feature vectors and labels.
pub fn build_dataset(features: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Dataset> {
    if features.is_empty() || labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    Dataset::new(PointSet::new(features)?, labels)
}

impl Dataset {
    pub fn new(points: PointSet, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch {
                features: points.len(),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidLabel(bad));
        }
        Ok(Self { points, labels })
    }

    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        build_dataset(
            samples.iter().map(|s| s.features.clone()).collect(),
            samples.iter().map(|s| s.label).collect(),
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.points.point(i)
    }

    #[inline]
    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        self.points.iter().zip(&self.labels).map(|(p, &l)| Sample {
            features: p.to_vec(),
            label: l,
        })
    }

    /// Sub-dataset at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: self.points.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}
