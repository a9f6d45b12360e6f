//! Kernel density estimation from unlabelled points.
//!
//! The kernel is a radially truncated standard normal,
//! `K(u) = c_d exp(-|u|^2 / 2) 1{|u| <= r}`, with `c_d` chosen so that `K`
//! integrates to one in dimension `d`. Bandwidths are diagonal: coordinate `j`
//! of every difference is divided by `h_j` before the kernel is applied.

use std::f64::consts::PI;

use statrs::function::gamma::gamma_lr;

use crate::classify::DensityFn;
use crate::data::PointSet;
use crate::error::{Error, Result};

pub const DEFAULT_TRUNCATION_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    dim: usize,
    truncation_radius: f64,
    normalizing_constant: f64,
}

impl Kernel {
    pub fn truncated_normal(dim: usize, truncation_radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if !(truncation_radius > 0.0 && truncation_radius.is_finite()) {
            return Err(Error::param("truncation_radius", "must be positive and finite"));
        }
        // mass of N(0, I_d) inside the radius is P(chi^2_d <= r^2)
        let retained = gamma_lr(dim as f64 / 2.0, truncation_radius * truncation_radius / 2.0);
        let normalizing_constant = 1.0 / ((2.0 * PI).powf(dim as f64 / 2.0) * retained);
        Ok(Self {
            dim,
            truncation_radius,
            normalizing_constant,
        })
    }

    pub fn new(dim: usize) -> Result<Self> {
        Self::truncated_normal(dim, DEFAULT_TRUNCATION_RADIUS)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn normalizing_constant(&self) -> f64 {
        self.normalizing_constant
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let s: f64 = u.iter().map(|v| v * v).sum();
        self.value_at_squared_norm(s)
    }

    #[inline]
    fn value_at_squared_norm(&self, s: f64) -> f64 {
        if s <= self.truncation_radius * self.truncation_radius {
            self.normalizing_constant * (-0.5 * s).exp()
        } else {
            0.0
        }
    }
}

/// `f_m(x) = (m prod_j h_j)^{-1} sum_i K((x - X_i) / h)`.
#[derive(Debug, Clone)]
pub struct KdeModel {
    points: PointSet,
    bandwidths: Vec<f64>,
    kernel: Kernel,
    inv_bandwidths: Vec<f64>,
    scale: f64,
}

impl KdeModel {
    /// Model with the default truncated normal kernel.
    pub fn new(points: PointSet, bandwidths: Vec<f64>) -> Result<Self> {
        let kernel = Kernel::new(points.dim())?;
        Self::with_kernel(points, bandwidths, kernel)
    }

    pub fn with_kernel(points: PointSet, bandwidths: Vec<f64>, kernel: Kernel) -> Result<Self> {
        if bandwidths.len() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: points.dim(),
                found: bandwidths.len(),
            });
        }
        if kernel.dim() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: points.dim(),
                found: kernel.dim(),
            });
        }
        if let Some(&h) = bandwidths.iter().find(|&&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::param("bandwidth", format!("{h} is not positive and finite")));
        }
        let inv_bandwidths = bandwidths.iter().map(|h| 1.0 / h).collect();
        let scale = 1.0 / (points.len() as f64 * bandwidths.iter().product::<f64>());
        Ok(Self {
            points,
            bandwidths,
            kernel,
            inv_bandwidths,
            scale,
        })
    }

    /// Model with the same scalar bandwidth on every axis.
    pub fn isotropic(points: PointSet, h: f64) -> Result<Self> {
        let d = points.dim();
        Self::new(points, vec![h; d])
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.points.check_query(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let r2 = self.kernel.truncation_radius * self.kernel.truncation_radius;
        let mut acc = 0.0;
        'points: for p in self.points.iter() {
            let mut s = 0.0;
            for ((xj, pj), ih) in x.iter().zip(p).zip(&self.inv_bandwidths) {
                let u = (xj - pj) * ih;
                s += u * u;
                if s > r2 {
                    continue 'points;
                }
            }
            acc += (-0.5 * s).exp();
        }
        acc * self.kernel.normalizing_constant * self.scale
    }
}

impl DensityFn for KdeModel {
    /// Dimension mismatches evaluate to NaN, which local-k rules reject.
    fn density(&self, x: &[f64]) -> f64 {
        if x.len() != self.points.dim() {
            return f64::NAN;
        }
        self.evaluate_unchecked(x)
    }
}

/// Evaluates the estimator at `x`.
pub fn kde_evaluate(model: &KdeModel, x: &[f64]) -> Result<f64> {
    model.evaluate(x)
}

/// `h_m = A m^{-1/(d + 2 gamma)}`.
pub fn bandwidth_theoretical(a: f64, m: usize, d: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(Error::param("gamma", format!("{gamma} not in (0, 2]")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("A", "must be positive and finite"));
    }
    if m == 0 || d == 0 {
        return Err(Error::param("m, d", "must be at least 1"));
    }
    Ok(a * (m as f64).powf(-1.0 / (d as f64 + 2.0 * gamma)))
}

/// Normal-scale diagonal bandwidths `h_j = sd_j (4 / ((d + 2) m))^{1/(d+4)}`,
/// with `sd_j` the sample standard deviation (denominator `m - 1`).
pub fn bandwidth_reference(points: &PointSet) -> Result<Vec<f64>> {
    let m = points.len();
    let d = points.dim();
    if m < 2 {
        return Err(Error::param("m", "need at least 2 points"));
    }
    let factor = (4.0 / ((d as f64 + 2.0) * m as f64)).powf(1.0 / (d as f64 + 4.0));
    (0..d)
        .map(|j| {
            let mean = points.iter().map(|p| p[j]).sum::<f64>() / m as f64;
            let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            if var > 0.0 && var.is_finite() {
                Ok(var.sqrt() * factor)
            } else {
                Err(Error::DegenerateCoordinate(j))
            }
        })
        .collect()
}

/// Largest value of `f` over `eval_points`.
pub fn sup_estimate(f: &dyn DensityFn, eval_points: &PointSet) -> Result<f64> {
    if eval_points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(eval_points
        .iter()
        .map(|x| f.density(x))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `max_grid |model - truth|`, a grid proxy for the sup-norm error.
pub fn sup_error(truth: &dyn DensityFn, model: &dyn DensityFn, grid: &PointSet) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(grid
        .iter()
        .map(|x| (model.density(x) - truth.density(x)).abs())
        .fold(0.0, f64::max))
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GridBox {
    /// Bounding box of `points` widened by `pad[j]` on each side of axis `j`.
    pub fn around(points: &PointSet, pad: &[f64]) -> Result<Self> {
        if pad.len() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: points.dim(),
                found: pad.len(),
            });
        }
        let d = points.dim();
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for p in points.iter() {
            for j in 0..d {
                lower[j] = lower[j].min(p[j]);
                upper[j] = upper[j].max(p[j]);
            }
        }
        for j in 0..d {
            lower[j] -= pad[j];
            upper[j] += pad[j];
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn axis(&self, j: usize, per_axis: usize) -> Vec<f64> {
        let (a, b) = (self.lower[j], self.upper[j]);
        (0..per_axis)
            .map(|i| a + (b - a) * i as f64 / (per_axis - 1) as f64)
            .collect()
    }

    /// Uniform lattice with `per_axis` nodes per coordinate, endpoints included.
    pub fn lattice(&self, per_axis: usize) -> Result<PointSet> {
        Ok(self.lattice_with_weights(per_axis)?.0)
    }

    /// Lattice plus product trapezoid weights, so that `sum w_i g(x_i)`
    /// approximates the integral of `g` over the box.
    pub fn lattice_with_weights(&self, per_axis: usize) -> Result<(PointSet, Vec<f64>)> {
        if per_axis < 2 {
            return Err(Error::param("per_axis", "need at least 2 nodes per axis"));
        }
        let d = self.dim();
        let axes: Vec<Vec<f64>> = (0..d).map(|j| self.axis(j, per_axis)).collect();
        let steps: Vec<f64> = (0..d)
            .map(|j| (self.upper[j] - self.lower[j]) / (per_axis - 1) as f64)
            .collect();
        let total = per_axis.pow(d as u32);
        let mut coords = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let mut w = 1.0;
            for j in 0..d {
                coords.push(axes[j][idx[j]]);
                let edge = idx[j] == 0 || idx[j] == per_axis - 1;
                w *= if edge { 0.5 * steps[j] } else { steps[j] };
            }
            weights.push(w);
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < per_axis {
                    break;
                }
                idx[j] = 0;
            }
        }
        Ok((PointSet::from_flat(d, coords)?, weights))
    }
}

/// Trapezoid-rule integral of `f` over `bounds` on a `per_axis^d` lattice.
pub fn lattice_integral(f: &dyn DensityFn, bounds: &GridBox, per_axis: usize) -> Result<f64> {
    let (grid, weights) = bounds.lattice_with_weights(per_axis)?;
    Ok(grid.iter().zip(&weights).map(|(x, w)| w * f.density(x)).sum())
}
