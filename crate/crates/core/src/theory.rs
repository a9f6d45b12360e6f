//! Asymptotic excess-risk constants evaluated on the Bayes boundary
//! `S = {eta = 1/2}`, the predicted regret curve and log-log rate fits.
//!
//! For a standard `k`-nearest-neighbour classifier the excess risk behaves
//! like `B1 / k + B2 (k/n)^{4/d}` with
//!
//! ```text
//! B1 = int_S f / (4 |grad eta|)
//! B2 = int_S f^{1 - 4/d} a^2 / |grad eta|
//! a  = sum_j { eta_j f_j + eta_jj f / 2 } / ((d+2) a_d^{2/d} f)
//! ```
//!
//! and the local rule with `k = B f^{4/(d+4)} n^{4/(d+4)}` has leading
//! constant `B3(B) = int_S f^{d/(d+4)} / |grad eta| {1/(4B) + B^{4/d} a^2}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::distributions::{ln_gamma_fn, ClassModel, DistributionSpec, SpecKind};
use crate::error::{Error, Result};

/// Half-width of the parametrised patch of the Example 2 boundary line.
pub const EXAMPLE2_TRUNCATION: f64 = 40.0;

/// Panels per Example 2 tail; short panels keep Gauss–Legendre accurate on
/// the exponential tails.
const TAIL_PANELS: usize = 13;

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Lebesgue measure of the unit ball in `R^d`.
pub fn a_d_constant(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma_fn(h)).exp() / d as f64
}

/// The drift function `a(x)` of the bias term.
pub fn a_value(model: &dyn ClassModel, x: &[f64]) -> Result<f64> {
    let dv = crate::distributions::derivatives(model, x)?;
    if dv.fbar_value <= 0.0 {
        return Err(Error::Nonpositive {
            what: "marginal density",
            value: dv.fbar_value,
        });
    }
    let d = model.dim();
    let numer = compensated_sum(
        (0..d).map(|j| dv.eta_grad[j] * dv.fbar_grad[j] + 0.5 * dv.eta_hess_diag[j] * dv.fbar_value),
    );
    Ok(numer / ((d as f64 + 2.0) * a_d_constant(d).powf(2.0 / d as f64) * dv.fbar_value))
}

/// Nodes and weights approximating `int_S g dVol^{d-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceQuadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub description: String,
}

impl SurfaceQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        compensated_sum(self.nodes.iter().zip(&self.weights).map(|(x, w)| w * g(x)))
    }
}

/// Gauss–Legendre rule mapped to `[a, b]`.
fn gauss_legendre(q: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(q).expect("q >= 1"));
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(t, w)| (mid + half * t, half * w))
        .collect()
}

/// Quadrature on the Bayes boundary of `example1` (the sphere of radius
/// `2^{-1/2}`) or `example2` (the line `x_1 = 1/2`, truncated to
/// `|x_2| <= 40`).
pub fn boundary_quadrature(spec: &DistributionSpec, node_count: usize) -> Result<SurfaceQuadrature> {
    if node_count < 16 {
        return Err(Error::param("node_count", "need at least 16 nodes"));
    }
    match spec.kind() {
        SpecKind::Example1 => Ok(sphere_quadrature(spec.dim(), FRAC_1_SQRT_2, node_count)),
        SpecKind::Example2 => Ok(line_quadrature(node_count)),
        other => Err(Error::Unsupported(format!("{other} boundary quadrature"))),
    }
}

fn sphere_quadrature(d: usize, r: f64, node_count: usize) -> SurfaceQuadrature {
    let description = format!("sphere of radius 2^(-1/2) in R^{d}");
    match d {
        1 => SurfaceQuadrature {
            nodes: vec![vec![-r], vec![r]],
            weights: vec![1.0, 1.0],
            description,
        },
        2 => {
            let w = 2.0 * PI * r / node_count as f64;
            let nodes = (0..node_count)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / node_count as f64;
                    vec![r * th.cos(), r * th.sin()]
                })
                .collect();
            SurfaceQuadrature {
                nodes,
                weights: vec![w; node_count],
                description,
            }
        }
        _ => {
            // polar angles theta_1..theta_{d-2} by Gauss–Legendre on [0, pi],
            // azimuth equispaced (periodic integrand)
            let polar = d - 2;
            let q = ((node_count as f64).powf(1.0 / (d - 1) as f64).ceil() as usize).max(16);
            let theta = gauss_legendre(q, 0.0, PI);
            let n_phi = 2 * q;
            let w_phi = 2.0 * PI / n_phi as f64;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            let mut idx = vec![0usize; polar];
            loop {
                let mut w = r.powi(d as i32 - 1) * w_phi;
                let mut sin_prod = r;
                let mut head = Vec::with_capacity(d);
                for (i, &k) in idx.iter().enumerate() {
                    let (th, wt) = theta[k];
                    w *= wt * th.sin().powi((d - 2 - i) as i32);
                    head.push(sin_prod * th.cos());
                    sin_prod *= th.sin();
                }
                for p in 0..n_phi {
                    let phi = 2.0 * PI * p as f64 / n_phi as f64;
                    let mut x = head.clone();
                    x.push(sin_prod * phi.cos());
                    x.push(sin_prod * phi.sin());
                    nodes.push(x);
                    weights.push(w);
                }
                // odometer over the polar indices
                let mut pos = 0;
                while pos < polar {
                    idx[pos] += 1;
                    if idx[pos] < q {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == polar {
                    break;
                }
            }
            SurfaceQuadrature {
                nodes,
                weights,
                description,
            }
        }
    }
}

fn line_quadrature(node_count: usize) -> SurfaceQuadrature {
    let panels = 2 * TAIL_PANELS + 1;
    let q = node_count.div_ceil(panels).max(4);
    let step = (EXAMPLE2_TRUNCATION - 1.0) / TAIL_PANELS as f64;
    let mut edges = Vec::with_capacity(panels + 1);
    for i in 0..=TAIL_PANELS {
        edges.push(-EXAMPLE2_TRUNCATION + step * i as f64);
    }
    for i in 0..=TAIL_PANELS {
        edges.push(1.0 + step * i as f64);
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in edges.windows(2) {
        for (t, w) in gauss_legendre(q, pair[0], pair[1]) {
            nodes.push(vec![0.5, t]);
            weights.push(w);
        }
    }
    SurfaceQuadrature {
        nodes,
        weights,
        description: format!("line x_1 = 1/2, |x_2| <= {EXAMPLE2_TRUNCATION}"),
    }
}

/// Per-node `(f, |grad eta|, a)`; `a` is `None` when `f = 0`.
fn node_terms(model: &dyn ClassModel, x: &[f64]) -> Result<(f64, f64, Option<f64>)> {
    let dv = crate::distributions::derivatives(model, x)?;
    let grad = dv.eta_grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if grad == 0.0 {
        return Err(Error::Nonpositive {
            what: "|grad eta| on the boundary",
            value: 0.0,
        });
    }
    let a = if dv.fbar_value > 0.0 {
        Some(a_value(model, x)?)
    } else {
        None
    };
    Ok((dv.fbar_value, grad, a))
}

fn integrate_terms(
    model: &dyn ClassModel,
    quad: &SurfaceQuadrature,
    g: impl Fn(f64, f64, Option<f64>) -> Result<f64>,
) -> Result<f64> {
    let mut terms = Vec::with_capacity(quad.len());
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        let (f, grad, a) = node_terms(model, x)?;
        terms.push(w * g(f, grad, a)?);
    }
    Ok(compensated_sum(terms))
}

fn need_a(f: f64, a: Option<f64>) -> Result<f64> {
    a.ok_or(Error::Nonpositive {
        what: "marginal density on the boundary",
        value: f,
    })
}

pub fn constant_b1(model: &dyn ClassModel, quad: &SurfaceQuadrature) -> Result<f64> {
    integrate_terms(model, quad, |f, grad, _| Ok(f / (4.0 * grad)))
}

pub fn constant_b2(model: &dyn ClassModel, quad: &SurfaceQuadrature) -> Result<f64> {
    let d = model.dim() as f64;
    integrate_terms(model, quad, |f, grad, a| {
        let a = need_a(f, a)?;
        Ok(f.powf(1.0 - 4.0 / d) * a * a / grad)
    })
}

/// The two integrals `(P, Q)` with `B3(B) = P / (4B) + Q B^{4/d}`.
fn b3_parts(model: &dyn ClassModel, quad: &SurfaceQuadrature) -> Result<(f64, f64)> {
    let d = model.dim() as f64;
    let p = integrate_terms(model, quad, |f, grad, _| Ok(f.powf(d / (d + 4.0)) / grad))?;
    let q = integrate_terms(model, quad, |f, grad, a| {
        let a = need_a(f, a)?;
        Ok(f.powf(d / (d + 4.0)) * a * a / grad)
    })?;
    Ok((p, q))
}

pub fn constant_b3(model: &dyn ClassModel, quad: &SurfaceQuadrature, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Nonpositive { what: "B", value: b });
    }
    let (p, q) = b3_parts(model, quad)?;
    Ok(p / (4.0 * b) + q * b.powf(4.0 / model.dim() as f64))
}

/// The `B` minimising `B3`, `(d P / (16 Q))^{d/(d+4)}`; `None` when the
/// bias integral vanishes and `B3` decreases without bound in `B`.
pub fn optimal_b(model: &dyn ClassModel, quad: &SurfaceQuadrature) -> Result<Option<f64>> {
    let (p, q) = b3_parts(model, quad)?;
    let d = model.dim() as f64;
    Ok((q > 0.0).then(|| (d * p / (16.0 * q)).powf(d / (d + 4.0))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    pub b1: f64,
    pub b2: f64,
    pub b3: Option<f64>,
    pub b: Option<f64>,
    /// Largest change in any reported constant between `node_count` and
    /// `2 node_count` nodes.
    pub quadrature_estimate_error: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub node_count: usize,
    pub boundary: String,
}

/// All constants for `spec`, with a quadrature error estimate from a
/// second rule with twice the nodes.
pub fn expansion_constants(
    spec: &DistributionSpec,
    node_count: usize,
    b: Option<f64>,
) -> Result<ExpansionConstants> {
    let eval = |count: usize| -> Result<(SurfaceQuadrature, f64, f64, Option<f64>)> {
        let quad = boundary_quadrature(spec, count)?;
        let b1 = constant_b1(spec, &quad)?;
        let b2 = constant_b2(spec, &quad)?;
        let b3 = b.map(|b| constant_b3(spec, &quad, b)).transpose()?;
        Ok((quad, b1, b2, b3))
    };
    let (quad, b1, b2, b3) = eval(node_count)?;
    let (_, b1f, b2f, b3f) = eval(2 * node_count)?;
    let mut err = (b1 - b1f).abs().max((b2 - b2f).abs());
    if let (Some(x), Some(y)) = (b3, b3f) {
        err = err.max((x - y).abs());
    }
    let mut a_min = f64::INFINITY;
    let mut a_max = f64::NEG_INFINITY;
    for x in &quad.nodes {
        let a = a_value(spec, x)?;
        a_min = a_min.min(a);
        a_max = a_max.max(a);
    }
    Ok(ExpansionConstants {
        b1,
        b2,
        b3,
        b,
        quadrature_estimate_error: err,
        a_min,
        a_max,
        node_count: quad.len(),
        boundary: quad.description,
    })
}

/// `B1 / k + B2 (k/n)^{4/d}`.
pub fn predicted_excess(b1: f64, b2: f64, k: f64, n: f64, d: usize) -> Result<f64> {
    if k < 1.0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if n <= k {
        return Err(Error::param("n", "must exceed k"));
    }
    Ok(b1 / k + b2 * (k / n).powf(4.0 / d as f64))
}

/// Continuous minimiser of [`predicted_excess`] in `k`.
pub fn optimal_k(b1: f64, b2: f64, n: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * b1 * n.powf(4.0 / d) / (4.0 * b2)).powf(d / (d + 4.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln n, ln regret)`.
pub fn rate_slope(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::param("points", "need at least 3 (n, regret) pairs"));
    }
    if let Some(&(_, r)) = points.iter().find(|(_, r)| !(*r > 0.0)) {
        return Err(Error::Nonpositive { what: "regret", value: r });
    }
    if let Some(&(n, _)) = points.iter().find(|(n, _)| !(*n > 0.0)) {
        return Err(Error::Nonpositive { what: "n", value: n });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "all sample sizes are equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;
    use crate::distributions::Derivatives;
    use crate::rng::{derive_stream, RngStream};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ex1(d: usize) -> DistributionSpec {
        DistributionSpec::new(SpecKind::Example1, d).unwrap()
    }

    fn ex2() -> DistributionSpec {
        DistributionSpec::new(SpecKind::Example2, 2).unwrap()
    }

    /// Test double with prescribed boundary quantities at every point.
    struct Flat {
        d: usize,
        fbar: f64,
        hess: f64,
        fgrad: f64,
    }

    impl ClassModel for Flat {
        fn dim(&self) -> usize {
            self.d
        }
        fn sample_pair(&self, _: &mut RngStream) -> Sample {
            unreachable!()
        }
        fn eta_at(&self, x: &[f64]) -> f64 {
            x[0]
        }
        fn marginal_at(&self, _: &[f64]) -> f64 {
            self.fbar
        }
        fn derivatives_at(&self, _: &[f64]) -> Result<Derivatives> {
            let mut eta_grad = vec![0.0; self.d];
            eta_grad[0] = 1.0;
            Ok(Derivatives {
                eta_grad,
                eta_hess_diag: vec![self.hess; self.d],
                fbar_grad: vec![self.fgrad; self.d],
                fbar_value: self.fbar,
            })
        }
    }

    fn flat(fbar: f64) -> Flat {
        Flat { d: 2, fbar, hess: 0.0, fgrad: 0.0 }
    }

    fn line_quad() -> SurfaceQuadrature {
        boundary_quadrature(&ex2(), 512).unwrap()
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(a_d_constant(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(a_d_constant(2), PI, max_relative = 1e-14);
        assert_relative_eq!(a_d_constant(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn a_vanishes_for_linear_eta_and_flat_density() {
        assert_eq!(a_value(&flat(0.3), &[0.5, 0.0]).unwrap(), 0.0);
        assert!(a_value(&flat(0.0), &[0.5, 0.0]).is_err());
    }

    #[test]
    fn a_on_example1_circle() {
        let r = FRAC_1_SQRT_2;
        let a = a_value(&ex1(2), &[r, 0.0]).unwrap();
        assert_relative_eq!(a, -3.0 / (2.0 * PI), max_relative = 1e-12);
        assert!((a + 0.47746).abs() < 1e-5);
        for d in [3usize, 5] {
            let mut x = vec![0.0; d];
            x[d - 1] = r;
            let want = (d as f64 - 8.0) / ((d as f64 + 2.0) * a_d_constant(d).powf(2.0 / d as f64));
            assert_relative_eq!(a_value(&ex1(d), &x).unwrap(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn a_on_example2_line() {
        for t in [-3.0, 0.0, 0.7, 5.0] {
            assert_relative_eq!(a_value(&ex2(), &[0.5, t]).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-12);
        }
    }

    fn random_on_sphere(d: usize, rng: &mut RngStream) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x * FRAC_1_SQRT_2 / n).collect()
    }

    /// `a` from central-difference derivatives of `eta` and `f` alone.
    fn a_by_differences(model: &dyn ClassModel, x: &[f64]) -> f64 {
        let h = 1e-5;
        let d = x.len();
        let f = model.marginal_at(x);
        let mut numer = 0.0;
        for j in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let eta_j = (model.eta_at(&xp) - model.eta_at(&xm)) / (2.0 * h);
            let eta_jj = (model.eta_at(&xp) - 2.0 * model.eta_at(x) + model.eta_at(&xm)) / (h * h);
            let f_j = (model.marginal_at(&xp) - model.marginal_at(&xm)) / (2.0 * h);
            numer += eta_j * f_j + 0.5 * eta_jj * f;
        }
        numer / ((d as f64 + 2.0) * a_d_constant(d).powf(2.0 / d as f64) * f)
    }

    #[test]
    fn a_matches_finite_differences_on_boundary() {
        let mut rng = derive_stream(11, 0);
        for d in [2usize, 3] {
            let spec = ex1(d);
            for _ in 0..20 {
                let x = random_on_sphere(d, &mut rng);
                let a = a_value(&spec, &x).unwrap();
                assert_relative_eq!(a_by_differences(&spec, &x), a, max_relative = 1e-5);
            }
        }
        let spec = ex2();
        for _ in 0..20 {
            let x = [0.5, 6.0 * rng.uniform() - 3.0];
            let a = a_value(&spec, &x).unwrap();
            assert_relative_eq!(a_by_differences(&spec, &x), a, max_relative = 1e-5);
        }
    }

    #[test]
    fn a_is_rotation_invariant_for_example1() {
        let mut rng = derive_stream(12, 0);
        let d = 4;
        let spec = ex1(d);
        for _ in 0..10 {
            let x = random_on_sphere(d, &mut rng);
            let base = a_value(&spec, &x).unwrap();
            for _ in 0..2 {
                let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let q = m.qr().q();
                let y = &q * nalgebra::DVector::from_column_slice(&x);
                let a = a_value(&spec, y.as_slice()).unwrap();
                assert!((a - base).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn circle_quadrature_weights_and_nodes() {
        let q = boundary_quadrature(&ex1(2), 1024).unwrap();
        assert!((q.total_weight() - 2f64.sqrt() * PI).abs() < 1e-10);
        let spec = ex1(2);
        assert!(q.nodes.iter().all(|x| (spec.eta_at(x) - 0.5).abs() < 1e-10));
        let mass = |n| boundary_quadrature(&spec, n).unwrap().integrate(|x| spec.marginal_at(x));
        assert!((mass(1024) - mass(2048)).abs() < 1e-8);
    }

    #[test]
    fn sphere_quadrature_area_in_higher_dimensions() {
        for d in [1usize, 3, 4, 5] {
            let q = boundary_quadrature(&ex1(d), 512).unwrap();
            let r = FRAC_1_SQRT_2;
            let area = if d == 1 {
                2.0
            } else {
                d as f64 * a_d_constant(d) * r.powi(d as i32 - 1)
            };
            assert_relative_eq!(q.total_weight(), area, max_relative = 1e-8);
            let spec = ex1(d);
            assert!(q.nodes.iter().all(|x| (spec.eta_at(x) - 0.5).abs() < 1e-10));
            assert!(q.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn line_quadrature_integrates_f2() {
        let spec = ex2();
        let q = line_quad();
        assert!((q.integrate(|x| spec.bridge().f2(x[1])) - 1.0).abs() < 1e-8);
        assert!(q.nodes.iter().all(|x| (spec.eta_at(x) - 0.5).abs() < 1e-10));
        assert!((q.total_weight() - 2.0 * EXAMPLE2_TRUNCATION).abs() < 1e-10);
    }

    #[test]
    fn quadrature_rejects_settings_and_small_counts() {
        let s1 = DistributionSpec::new(SpecKind::Setting1, 2).unwrap();
        assert!(matches!(boundary_quadrature(&s1, 64), Err(Error::Unsupported(_))));
        assert!(boundary_quadrature(&ex1(2), 8).is_err());
    }

    #[test]
    fn b1_closed_forms() {
        let spec = ex1(2);
        let q = boundary_quadrature(&spec, 1024).unwrap();
        assert!((constant_b1(&spec, &q).unwrap() - 3.0 / 16.0).abs() < 1e-6);
        assert!((constant_b1(&ex2(), &line_quad()).unwrap() - 0.25).abs() < 1e-6);
        assert_eq!(constant_b1(&flat(0.0), &line_quad()).unwrap(), 0.0);
        for d in [3usize, 5] {
            let spec = ex1(d);
            let q = boundary_quadrature(&spec, 512).unwrap();
            let c = spec.example1_normalizer();
            let area = d as f64 * a_d_constant(d) * FRAC_1_SQRT_2.powi(d as i32 - 1);
            let want = (c / 4.0) * area / (4.0 * 2f64.sqrt());
            assert_relative_eq!(constant_b1(&spec, &q).unwrap(), want, max_relative = 1e-8);
        }
    }

    #[test]
    fn b2_closed_form_and_convergence() {
        let spec = ex1(2);
        let q = boundary_quadrature(&spec, 1024).unwrap();
        let b2 = constant_b2(&spec, &q).unwrap();
        let want = (4.0 * PI / 3.0) * (9.0 / (4.0 * PI * PI)) * (2f64.sqrt() * PI) / 2f64.sqrt();
        assert!((want - 3.0).abs() < 1e-12);
        assert!((b2 - 3.0).abs() < 1e-5);
        let q2 = boundary_quadrature(&spec, 2048).unwrap();
        assert!((constant_b2(&spec, &q2).unwrap() - b2).abs() < 1e-8);
        assert_eq!(constant_b2(&flat(0.4), &line_quad()).unwrap(), 0.0);
        assert!(constant_b2(&flat(0.0), &line_quad()).is_err());
    }

    #[test]
    fn b3_closed_form_and_reduction() {
        let spec = ex1(2);
        let q = boundary_quadrature(&spec, 1024).unwrap();
        let want = PI * (3.0 / (4.0 * PI)).powf(1.0 / 3.0) * (0.25 + 9.0 / (4.0 * PI * PI));
        let b3 = constant_b3(&spec, &q, 1.0).unwrap();
        assert!((b3 - want).abs() < 1e-4);
        assert!((b3 - 0.9315).abs() < 1e-4);

        let double = flat(0.4);
        let lq = line_quad();
        let b = 2.5;
        let reduced = lq.integrate(|_| 0.4f64.powf(2.0 / 6.0)) / (4.0 * b);
        assert_relative_eq!(constant_b3(&double, &lq, b).unwrap(), reduced, max_relative = 1e-12);
        assert!(constant_b3(&spec, &q, 0.0).is_err());
        assert_eq!(optimal_b(&double, &lq).unwrap(), None);
    }

    #[test]
    fn b3_minimiser_is_stationary() {
        for spec in [ex1(2), ex1(3)] {
            let q = boundary_quadrature(&spec, 512).unwrap();
            let b_star = optimal_b(&spec, &q).unwrap().unwrap();
            let h = 1e-4 * b_star;
            let f = |b: f64| constant_b3(&spec, &q, b).unwrap();
            let slope = (f(b_star + h) - f(b_star - h)) / (2.0 * h);
            assert!(slope.abs() < 1e-6, "slope {slope}");
            assert!(f(0.5 * b_star) > f(b_star) && f(2.0 * b_star) > f(b_star));
        }
    }

    #[test]
    fn quadrature_converges_for_b1() {
        for spec in [ex1(2), ex2()] {
            for n in [512usize, 1024] {
                let a = constant_b1(&spec, &boundary_quadrature(&spec, n).unwrap()).unwrap();
                let b = constant_b1(&spec, &boundary_quadrature(&spec, 2 * n).unwrap()).unwrap();
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn expansion_constants_bundle() {
        let c = expansion_constants(&ex1(2), 512, Some(1.0)).unwrap();
        assert!((c.b1 - 0.1875).abs() < 1e-6);
        assert!((c.b2 - 3.0).abs() < 1e-5);
        assert!((c.b3.unwrap() - 0.9315).abs() < 1e-4);
        assert!(c.quadrature_estimate_error < 1e-8);
        assert!((c.a_min + 3.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((c.a_max - c.a_min).abs() < 1e-12);
    }

    #[test]
    fn predicted_excess_reductions() {
        assert_eq!(predicted_excess(2.0, 0.0, 4.0, 100.0, 3).unwrap(), 0.5);
        let n: f64 = 10_000.0;
        let d = 4;
        let k = n.powf(d as f64 / (d as f64 + 4.0));
        let both = predicted_excess(1.0, 1.0, k, n, d).unwrap();
        let term = n.powf(-(d as f64) / (d as f64 + 4.0));
        assert_relative_eq!(both, 2.0 * term, max_relative = 1e-12);
        assert!(predicted_excess(1.0, 1.0, 0.5, 10.0, 2).is_err());
        assert!(predicted_excess(1.0, 1.0, 10.0, 10.0, 2).is_err());
    }

    #[test]
    fn optimal_k_matches_grid_argmin_and_curve_is_unimodal() {
        for &(b1, b2, n, d) in &[(0.1875, 3.0, 5000usize, 2usize), (1.0, 0.3, 2000, 5), (0.25, 1.0, 10_000, 1)] {
            let curve: Vec<f64> = (1..n)
                .map(|k| predicted_excess(b1, b2, k as f64, n as f64, d).unwrap())
                .collect();
            let arg = (0..curve.len())
                .min_by(|&i, &j| curve[i].total_cmp(&curve[j]))
                .unwrap()
                + 1;
            let k_star = optimal_k(b1, b2, n as f64, d);
            assert!((arg as f64 - k_star).abs() <= 1.0, "{arg} vs {k_star}");
            for k in 1..arg - 1 {
                assert!(curve[k - 1] > curve[k]);
            }
            for k in arg..curve.len() {
                assert!(curve[k] > curve[k - 1]);
            }
        }
    }

    #[test]
    fn rate_fits() {
        let exact: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0f64]
            .iter()
            .map(|&n| (n, 3.0 * n.powf(-2.0 / 3.0)))
            .collect();
        let fit = rate_slope(&exact).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat_pts = [(10.0, 0.2), (20.0, 0.2), (40.0, 0.2)];
        assert_eq!(rate_slope(&flat_pts).unwrap().slope, 0.0);

        let mut rng = derive_stream(13, 0);
        let noisy: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let n = 100.0 * 2f64.powi(i);
                let eps: f64 = rng.sample(StandardNormal);
                (n, n.powf(-0.5) * (1.0 + 0.01 * eps))
            })
            .collect();
        assert!((rate_slope(&noisy).unwrap().slope + 0.5).abs() < 0.05);

        assert!(rate_slope(&[(10.0, 0.1), (20.0, 0.0), (40.0, 0.1)]).is_err());
        assert!(rate_slope(&[(10.0, 0.1), (20.0, 0.1)]).is_err());
    }
}
