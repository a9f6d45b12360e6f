//! Local-k nearest neighbour classification.
//!
//! This crate implements the standard k-nearest-neighbour classifier together
//! with two locally adaptive variants in which the number of neighbours used at
//! a query point grows with the marginal feature density there: an oracle
//! version fed by the true density, and a semi-supervised version fed by a
//! kernel density estimate built from unlabelled data.
//!
//! Around the classifiers sit the pieces needed to study them:
//!
//! * [`distributions`]: benchmark generative models with closed-form
//!   regression functions, marginal densities and derivatives.
//! * [`select`]: 5-fold cross-validation over candidate grids for `k` and `B`.
//! * [`theory`]: surface quadrature on the Bayes decision boundary for the
//!   constants of the asymptotic excess-risk expansion.
//! * [`experiments`]: a seeded, schedule-independent Monte Carlo harness.
//!
//! With the default `parallel` feature, repetitions run on the rayon thread
//! pool; without it every code path is sequential. Results are identical in
//! both cases because every repetition draws from its own RNG stream.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod data;
pub mod density;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod neighbours;
pub mod rng;
pub mod select;
pub mod theory;

pub use classify::{classify, resolve_k, vote_fraction, DensityFn, KRule, VoteResult};
pub use data::{build_dataset, Dataset, Label, PointSet, Sample};
pub use density::{KdeModel, Kernel};
pub use distributions::{ClassModel, DistributionSpec};
pub use error::{Error, Result};
pub use neighbours::{full_ordering, k_nearest, NeighbourOrdering};
pub use rng::{derive_stream, RngStream};
