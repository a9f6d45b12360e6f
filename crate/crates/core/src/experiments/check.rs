use serde::{Deserialize, Serialize};

use super::config::BandwidthPolicy;
use super::trial::fit_kde;
use crate::classify::DensityFn;
use crate::density::{lattice_integral, sup_error, GridBox};
use crate::distributions::{sample_unlabelled, ClassModel, DistributionSpec};
use crate::error::{Error, Result};
use crate::rng::derive_stream;

/// Largest lattice the check will build.
const MAX_GRID_NODES: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCheck {
    pub spec: String,
    pub dim: usize,
    pub m: usize,
    pub grid_points: usize,
    pub bandwidths: Vec<f64>,
    /// Trapezoid integral of the estimate over a box covering its support.
    pub integral: f64,
    /// Largest absolute gap to the true marginal over the same lattice.
    pub sup_error: f64,
}

struct Marginal<'a>(&'a DistributionSpec);

impl DensityFn for Marginal<'_> {
    fn density(&self, x: &[f64]) -> f64 {
        self.0.marginal_at(x)
    }
}

/// Fits a KDE to `m` unlabelled draws and reports its lattice integral and
/// sup-norm error against the true marginal.
pub fn kde_check(
    spec: &DistributionSpec,
    m: usize,
    grid_points: usize,
    bandwidth: BandwidthPolicy,
    seed: u64,
) -> Result<KdeCheck> {
    let d = spec.dim();
    let total = grid_points.checked_pow(d as u32).unwrap_or(usize::MAX);
    if total > MAX_GRID_NODES {
        return Err(Error::param("grid_points", format!("{grid_points}^{d} lattice nodes is too many")));
    }
    let points = sample_unlabelled(spec, m, &mut derive_stream(seed, 1))?;
    let kde = fit_kde(points, bandwidth, d)?;
    let pad: Vec<f64> = kde
        .bandwidths()
        .iter()
        .map(|h| h * kde.kernel().truncation_radius())
        .collect();
    let bounds = GridBox::around(kde.points(), &pad)?;
    let integral = lattice_integral(&kde, &bounds, grid_points)?;
    let grid = bounds.lattice(grid_points)?;
    let err = sup_error(&Marginal(spec), &kde, &grid)?;
    Ok(KdeCheck {
        spec: spec.kind().to_string(),
        dim: d,
        m,
        grid_points,
        bandwidths: kde.bandwidths().to_vec(),
        integral,
        sup_error: err,
    })
}
