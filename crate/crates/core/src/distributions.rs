//! Benchmark generative models.
//!
//! Three simulation settings built from products of one-dimensional
//! components with equal class priors, plus two analytic examples used to
//! check the excess-risk constants:
//!
//! * `setting1`: class 1 is `N(0,1)^d`, class 0 is `N(1,1/4)^d`.
//! * `setting2`: class 1 is `t_5^d`; class 0 has `t_5` on the first `d/2`
//!   coordinates and `N(1,1)` on the rest.
//! * `setting3`: class 1 is standard Cauchy in every coordinate; class 0 has
//!   Cauchy on the first `d/2` coordinates and `N(0,1)` on the rest.
//! * `example1`: `f(x) = Gamma(3+d/2) / (2 pi^{d/2}) (1-|x|^2)^2` on the unit
//!   ball with `eta(x) = min(|x|^2, 1)`.
//! * `example2`: `f(x) = 2 x_1 f_2(x_2)` on `(0,1) x R` with `eta(x) = x_1`,
//!   where `f_2` has Laplace tails `e^{-|t|}/2` outside `[-1,1]` and an even
//!   sextic bridge inside.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::data::{Label, PointSet, Sample};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Analytic first and second derivative information at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub eta_grad: Vec<f64>,
    pub eta_hess_diag: Vec<f64>,
    pub fbar_grad: Vec<f64>,
    pub fbar_value: f64,
}

/// A joint distribution of `(X, Y)` on `R^d x {0,1}`.
///
/// Methods taking `x` assume `x.len() == self.dim()`; the free functions in
/// this module check that first.
pub trait ClassModel: Send + Sync {
    fn dim(&self) -> usize;

    fn sample_pair(&self, rng: &mut RngStream) -> Sample;

    /// A draw from the marginal of `X`.
    fn sample_features(&self, rng: &mut RngStream) -> Vec<f64> {
        self.sample_pair(rng).features
    }

    fn eta_at(&self, x: &[f64]) -> f64;

    fn marginal_at(&self, x: &[f64]) -> f64;

    fn derivatives_at(&self, _x: &[f64]) -> Result<Derivatives> {
        Err(Error::Unsupported("this model".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Setting1,
    Setting2,
    Setting3,
    Example1,
    Example2,
}

impl SpecKind {
    pub const ALL: [SpecKind; 5] = [
        SpecKind::Setting1,
        SpecKind::Setting2,
        SpecKind::Setting3,
        SpecKind::Example1,
        SpecKind::Example2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpecKind::Setting1 => "setting1",
            SpecKind::Setting2 => "setting2",
            SpecKind::Setting3 => "setting3",
            SpecKind::Example1 => "example1",
            SpecKind::Example2 => "example2",
        }
    }
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpecKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("spec", format!("unknown distribution `{s}`")))
    }
}

/// One-dimensional building block of the product-form settings.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Component {
    Normal { mean: f64, sd: f64 },
    StudentT5,
    Cauchy,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

impl Component {
    fn ln_pdf(self, x: f64) -> f64 {
        match self {
            Component::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - LN_SQRT_2PI
            }
            Component::StudentT5 => {
                // Gamma(3) / (sqrt(5 pi) Gamma(5/2)) = 8 / (3 pi sqrt 5)
                let ln_c = (8.0 / (3.0 * PI * 5f64.sqrt())).ln();
                ln_c - 3.0 * (1.0 + x * x / 5.0).ln()
            }
            Component::Cauchy => -PI.ln() - (x * x).ln_1p(),
        }
    }

    /// `(d/dx ln g, d^2/dx^2 ln g)`.
    fn ln_pdf_derivs(self, x: f64) -> (f64, f64) {
        match self {
            Component::Normal { mean, sd } => {
                let v = sd * sd;
                (-(x - mean) / v, -1.0 / v)
            }
            Component::StudentT5 => {
                let q = 5.0 + x * x;
                (-6.0 * x / q, -6.0 * (5.0 - x * x) / (q * q))
            }
            Component::Cauchy => {
                let q = 1.0 + x * x;
                (-2.0 * x / q, -2.0 * (1.0 - x * x) / (q * q))
            }
        }
    }

    fn sample(self, rng: &mut RngStream) -> f64 {
        match self {
            Component::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Component::StudentT5 => {
                let z: f64 = rng.sample(StandardNormal);
                let chi2: f64 = (0..5).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
                z / (chi2 / 5.0).sqrt()
            }
            Component::Cauchy => (PI * (rng.uniform() - 0.5)).tan(),
        }
    }
}

/// Even polynomial `a0 + a2 t^2 + a4 t^4 + a6 t^6` joining the Laplace tails
/// `e^{-|t|}/2` at `t = +-1` with matching value, slope and curvature, and
/// fixing the total mass of `f_2` at one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeCoefficients {
    pub a0: f64,
    pub a2: f64,
    pub a4: f64,
    pub a6: f64,
}

impl BridgeCoefficients {
    pub fn solve() -> Self {
        let tail = (-1.0f64).exp() / 2.0;
        #[rustfmt::skip]
        let m = Matrix4::new(
            1.0, 1.0,       1.0,       1.0,
            0.0, 2.0,       4.0,       6.0,
            0.0, 2.0,       12.0,      30.0,
            2.0, 2.0 / 3.0, 2.0 / 5.0, 2.0 / 7.0,
        );
        // the tails carry mass 2 * int_1^inf e^{-t}/2 dt = 1/e
        let rhs = Vector4::new(tail, -tail, tail, 1.0 - 1.0 / E);
        let a = m.lu().solve(&rhs).expect("bridge system is nonsingular");
        Self {
            a0: a[0],
            a2: a[1],
            a4: a[2],
            a6: a[3],
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = t * t;
        self.a0 + s * (self.a2 + s * (self.a4 + s * self.a6))
    }

    pub fn first(&self, t: f64) -> f64 {
        let s = t * t;
        t * (2.0 * self.a2 + s * (4.0 * self.a4 + s * 6.0 * self.a6))
    }

    pub fn second(&self, t: f64) -> f64 {
        let s = t * t;
        2.0 * self.a2 + s * (12.0 * self.a4 + s * 30.0 * self.a6)
    }

    /// `int_{-1}^{1}` of the bridge.
    pub fn mass(&self) -> f64 {
        2.0 * (self.a0 + self.a2 / 3.0 + self.a4 / 5.0 + self.a6 / 7.0)
    }

    /// `f_2(t)` on the whole line.
    pub fn f2(&self, t: f64) -> f64 {
        if t.abs() <= 1.0 {
            self.value(t)
        } else {
            0.5 * (-t.abs()).exp()
        }
    }

    pub fn f2_first(&self, t: f64) -> f64 {
        if t.abs() <= 1.0 {
            self.first(t)
        } else {
            -0.5 * t.signum() * (-t.abs()).exp()
        }
    }

    pub fn f2_second(&self, t: f64) -> f64 {
        if t.abs() <= 1.0 {
            self.second(t)
        } else {
            0.5 * (-t.abs()).exp()
        }
    }

    /// `sup f_2`, attained at 0 (the bridge decreases on `[0,1]` and the
    /// tails stay below its endpoint value).
    pub fn f2_sup(&self) -> f64 {
        self.a0
    }

    fn sample_f2(&self, rng: &mut RngStream) -> f64 {
        if rng.uniform() < 1.0 / E {
            let excess = -(1.0 - rng.uniform()).ln();
            if rng.uniform() < 0.5 {
                -(1.0 + excess)
            } else {
                1.0 + excess
            }
        } else {
            loop {
                let t = 2.0 * rng.uniform() - 1.0;
                if rng.uniform() * self.a0 <= self.value(t) {
                    return t;
                }
            }
        }
    }
}

/// One of the named benchmark distributions, with its derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    kind: SpecKind,
    dim: usize,
    class1: Vec<Component>,
    class0: Vec<Component>,
    example1_norm: f64,
    bridge: BridgeCoefficients,
}

impl DistributionSpec {
    pub fn new(kind: SpecKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if kind == SpecKind::Example2 && dim != 2 {
            return Err(Error::param("dim", "example2 is two-dimensional"));
        }
        let half = dim / 2;
        let std_normal = Component::Normal { mean: 0.0, sd: 1.0 };
        let (class1, class0) = match kind {
            SpecKind::Setting1 => (
                vec![std_normal; dim],
                vec![Component::Normal { mean: 1.0, sd: 0.5 }; dim],
            ),
            SpecKind::Setting2 => {
                let mut c0 = vec![Component::StudentT5; half];
                c0.resize(dim, Component::Normal { mean: 1.0, sd: 1.0 });
                (vec![Component::StudentT5; dim], c0)
            }
            SpecKind::Setting3 => {
                let mut c0 = vec![Component::Cauchy; half];
                c0.resize(dim, std_normal);
                (vec![Component::Cauchy; dim], c0)
            }
            SpecKind::Example1 | SpecKind::Example2 => (Vec::new(), Vec::new()),
        };
        let d = dim as f64;
        Ok(Self {
            kind,
            dim,
            class1,
            class0,
            example1_norm: gamma(3.0 + d / 2.0) / (2.0 * PI.powf(d / 2.0)),
            bridge: BridgeCoefficients::solve(),
        })
    }

    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        Self::new(name.parse()?, dim)
    }

    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    pub fn bridge(&self) -> &BridgeCoefficients {
        &self.bridge
    }

    /// `Gamma(3 + d/2) / (2 pi^{d/2})`, the normaliser of the first example.
    pub fn example1_normalizer(&self) -> f64 {
        self.example1_norm
    }

    fn is_setting(&self) -> bool {
        matches!(
            self.kind,
            SpecKind::Setting1 | SpecKind::Setting2 | SpecKind::Setting3
        )
    }

    /// `ln f_1(x) - ln f_0(x)`, coordinate by coordinate so shared
    /// components cancel exactly.
    fn log_ratio(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.class1.iter().zip(&self.class0))
            .map(|(&xj, (c1, c0))| if c1 == c0 { 0.0 } else { c1.ln_pdf(xj) - c0.ln_pdf(xj) })
            .sum()
    }

    fn class_log_densities(&self, x: &[f64]) -> (f64, f64) {
        let l0 = x.iter().zip(&self.class0).map(|(&v, c)| c.ln_pdf(v)).sum();
        let l1 = x.iter().zip(&self.class1).map(|(&v, c)| c.ln_pdf(v)).sum();
        (l0, l1)
    }

    /// Class-conditional density `f_r(x)` for the product-form settings.
    pub fn class_density(&self, class: Label, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        if !self.is_setting() {
            return Err(Error::Unsupported(format!("{} class densities", self.kind)));
        }
        let (l0, l1) = self.class_log_densities(x);
        Ok(if class == 1 { l1.exp() } else { l0.exp() })
    }

    /// `sup_x f(x)`. Closed form for the examples; for the settings the
    /// coordinates shared by both classes sit at their common mode 0 and the
    /// remaining coordinates are maximised along the diagonal, where the
    /// permutation symmetry of the mixture places its maximiser.
    pub fn density_sup(&self) -> f64 {
        match self.kind {
            SpecKind::Example1 => self.example1_norm,
            SpecKind::Example2 => 2.0 * self.bridge.f2_sup(),
            _ => {
                let mut shared_ln = 0.0;
                let mut differing = Vec::new();
                for (c1, c0) in self.class1.iter().zip(&self.class0) {
                    if c1 == c0 {
                        shared_ln += c1.ln_pdf(0.0);
                    } else {
                        differing.push((*c1, *c0));
                    }
                }
                let k = differing.len() as f64;
                let Some(&(g1, g0)) = differing.first() else {
                    return shared_ln.exp();
                };
                let along = |t: f64| 0.5 * ((k * g1.ln_pdf(t)).exp() + (k * g0.ln_pdf(t)).exp());
                shared_ln.exp() * maximize_1d(along, -5.0, 5.0)
            }
        }
    }
}

/// Maximum of `f` on `[lo, hi]`: dense scan, then golden-section refinement
/// around the best scan point.
fn maximize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const SCAN: usize = 20_000;
    let step = (hi - lo) / SCAN as f64;
    let (mut best_t, mut best) = (lo, f(lo));
    for i in 1..=SCAN {
        let t = lo + step * i as f64;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let (mut a, mut b) = (best_t - step, best_t + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

impl ClassModel for DistributionSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_pair(&self, rng: &mut RngStream) -> Sample {
        match self.kind {
            SpecKind::Setting1 | SpecKind::Setting2 | SpecKind::Setting3 => {
                let label = Label::from(rng.uniform() < 0.5);
                let comps = if label == 1 { &self.class1 } else { &self.class0 };
                let features = comps.iter().map(|c| c.sample(rng)).collect();
                Sample { features, label }
            }
            SpecKind::Example1 | SpecKind::Example2 => {
                let features = self.sample_features(rng);
                let label = Label::from(rng.uniform() < self.eta_at(&features));
                Sample { features, label }
            }
        }
    }

    fn sample_features(&self, rng: &mut RngStream) -> Vec<f64> {
        match self.kind {
            SpecKind::Example1 => loop {
                // uniform on the ball, thinned by (1 - r^2)^2 <= 1
                let mut x: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let radius = rng.uniform().powf(1.0 / self.dim as f64);
                x.iter_mut().for_each(|v| *v *= radius / norm);
                let r2 = radius * radius;
                if norm > 0.0 && rng.uniform() < (1.0 - r2) * (1.0 - r2) {
                    break x;
                }
            },
            SpecKind::Example2 => {
                let x1 = loop {
                    let v = (1.0 - rng.uniform()).sqrt();
                    if v < 1.0 {
                        break v;
                    }
                };
                vec![x1, self.bridge.sample_f2(rng)]
            }
            _ => self.sample_pair(rng).features,
        }
    }

    fn eta_at(&self, x: &[f64]) -> f64 {
        match self.kind {
            SpecKind::Example1 => x.iter().map(|v| v * v).sum::<f64>().min(1.0),
            SpecKind::Example2 => x[0].clamp(0.0, 1.0),
            _ => 1.0 / (1.0 + (-self.log_ratio(x)).exp()),
        }
    }

    fn marginal_at(&self, x: &[f64]) -> f64 {
        match self.kind {
            SpecKind::Example1 => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 < 1.0 {
                    self.example1_norm * (1.0 - r2) * (1.0 - r2)
                } else {
                    0.0
                }
            }
            SpecKind::Example2 => {
                if x[0] > 0.0 && x[0] < 1.0 {
                    2.0 * x[0] * self.bridge.f2(x[1])
                } else {
                    0.0
                }
            }
            _ => {
                let (l0, l1) = self.class_log_densities(x);
                0.5 * (l0.exp() + l1.exp())
            }
        }
    }

    fn derivatives_at(&self, x: &[f64]) -> Result<Derivatives> {
        let d = self.dim;
        match self.kind {
            SpecKind::Example1 => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= 1.0 {
                    return Err(Error::OutsideDifferentiableRegion);
                }
                let c = self.example1_norm;
                Ok(Derivatives {
                    eta_grad: x.iter().map(|v| 2.0 * v).collect(),
                    eta_hess_diag: vec![2.0; d],
                    fbar_grad: x.iter().map(|v| -4.0 * c * (1.0 - r2) * v).collect(),
                    fbar_value: c * (1.0 - r2) * (1.0 - r2),
                })
            }
            SpecKind::Example2 => {
                if !(x[0] > 0.0 && x[0] < 1.0) {
                    return Err(Error::OutsideDifferentiableRegion);
                }
                let b = &self.bridge;
                Ok(Derivatives {
                    eta_grad: vec![1.0, 0.0],
                    eta_hess_diag: vec![0.0, 0.0],
                    fbar_grad: vec![2.0 * b.f2(x[1]), 2.0 * x[0] * b.f2_first(x[1])],
                    fbar_value: 2.0 * x[0] * b.f2(x[1]),
                })
            }
            _ => {
                let (l0, l1) = self.class_log_densities(x);
                let (f0, f1) = (l0.exp(), l1.exp());
                let eta = self.eta_at(x);
                let w = eta * (1.0 - eta);
                let mut eta_grad = Vec::with_capacity(d);
                let mut eta_hess_diag = Vec::with_capacity(d);
                let mut fbar_grad = Vec::with_capacity(d);
                for ((&xj, c1), c0) in x.iter().zip(&self.class1).zip(&self.class0) {
                    let (s1, t1) = c1.ln_pdf_derivs(xj);
                    let (s0, t0) = c0.ln_pdf_derivs(xj);
                    let (u, uu) = (s1 - s0, t1 - t0);
                    eta_grad.push(w * u);
                    eta_hess_diag.push(w * ((1.0 - 2.0 * eta) * u * u + uu));
                    fbar_grad.push(0.5 * (f0 * s0 + f1 * s1));
                }
                Ok(Derivatives {
                    eta_grad,
                    eta_hess_diag,
                    fbar_grad,
                    fbar_value: 0.5 * (f0 + f1),
                })
            }
        }
    }
}

fn check_dim(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.len(),
        });
    }
    Ok(())
}

pub fn sample_pair(model: &dyn ClassModel, rng: &mut RngStream) -> Sample {
    model.sample_pair(rng)
}

/// `m` independent draws from the marginal of `X`.
pub fn sample_unlabelled(model: &dyn ClassModel, m: usize, rng: &mut RngStream) -> Result<PointSet> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let d = model.dim();
    let mut coords = Vec::with_capacity(m * d);
    for _ in 0..m {
        coords.extend(model.sample_features(rng));
    }
    PointSet::from_flat(d, coords)
}

/// `n` labelled draws as parallel point and label lists.
pub fn sample_labelled(
    model: &dyn ClassModel,
    n: usize,
    rng: &mut RngStream,
) -> Result<(PointSet, Vec<Label>)> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let d = model.dim();
    let mut coords = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let s = model.sample_pair(rng);
        coords.extend(s.features);
        labels.push(s.label);
    }
    Ok((PointSet::from_flat(d, coords)?, labels))
}

pub fn eta(model: &dyn ClassModel, x: &[f64]) -> Result<f64> {
    check_dim(model.dim(), x)?;
    Ok(model.eta_at(x))
}

pub fn marginal(model: &dyn ClassModel, x: &[f64]) -> Result<f64> {
    check_dim(model.dim(), x)?;
    Ok(model.marginal_at(x))
}

pub fn derivatives(model: &dyn ClassModel, x: &[f64]) -> Result<Derivatives> {
    check_dim(model.dim(), x)?;
    model.derivatives_at(x)
}

/// The Bayes classifier: 1 iff `eta(x) >= 1/2`.
pub fn bayes_label(model: &dyn ClassModel, x: &[f64]) -> Result<Label> {
    Ok(Label::from(eta(model, x)? >= 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesRisk {
    pub estimate: f64,
    pub se: f64,
}

/// Monte Carlo estimate of `E[min(eta(X), 1 - eta(X))]` over `n` marginal draws.
pub fn bayes_risk_mc(model: &dyn ClassModel, n: usize, rng: &mut RngStream) -> Result<BayesRisk> {
    if n < 100 {
        return Err(Error::param("N", "need at least 100 draws"));
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let x = model.sample_features(rng);
        let e = model.eta_at(&x);
        let v = e.min(1.0 - e);
        sum += v;
        sum_sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(BayesRisk {
        estimate: mean,
        se: (var / nf).sqrt(),
    })
}

/// `ln Gamma`, re-exported for closed-form checks in other modules.
pub(crate) fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use approx::assert_relative_eq;

    fn spec(kind: SpecKind, d: usize) -> DistributionSpec {
        DistributionSpec::new(kind, d).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in SpecKind::ALL {
            assert_eq!(k.name().parse::<SpecKind>().unwrap(), k);
        }
        assert!("setting4".parse::<SpecKind>().is_err());
        assert!(DistributionSpec::new(SpecKind::Example2, 3).is_err());
        assert!(DistributionSpec::new(SpecKind::Setting1, 0).is_err());
    }

    #[test]
    fn example1_support_and_eta() {
        let s = spec(SpecKind::Example1, 3);
        let mut rng = derive_stream(1, 0);
        for _ in 0..2000 {
            let x = s.sample_features(&mut rng);
            assert!(x.iter().map(|v| v * v).sum::<f64>() < 1.0);
        }
        assert_eq!(eta(&s, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(eta(&s, &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(eta(&s, &[2.0, 0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn example2_support() {
        let s = spec(SpecKind::Example2, 2);
        let mut rng = derive_stream(2, 0);
        for _ in 0..5000 {
            let x = s.sample_features(&mut rng);
            assert!(x[0] > 0.0 && x[0] < 1.0);
        }
    }

    #[test]
    fn marginal_closed_forms() {
        let e1 = spec(SpecKind::Example1, 2);
        assert_relative_eq!(marginal(&e1, &[0.0, 0.0]).unwrap(), 3.0 / PI, max_relative = 1e-14);
        assert_eq!(marginal(&e1, &[0.6, 0.8]).unwrap(), 0.0);
        assert_eq!(marginal(&e1, &[2.0, 0.0]).unwrap(), 0.0);
        let e2 = spec(SpecKind::Example2, 2);
        assert_relative_eq!(
            marginal(&e2, &[0.5, 2.0]).unwrap(),
            (-2.0f64).exp() / 2.0,
            max_relative = 1e-14
        );
        assert!((marginal(&e2, &[0.5, 2.0]).unwrap() - 0.067_668).abs() < 1e-6);
    }

    #[test]
    fn setting1_eta_matches_density_ratio() {
        let s = spec(SpecKind::Setting1, 1);
        let phi = |x: f64, m: f64, sd: f64| (-(x - m).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt());
        for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let f1 = phi(x, 0.0, 1.0);
            let f0 = phi(x, 1.0, 0.5);
            assert_relative_eq!(eta(&s, &[x]).unwrap(), f1 / (f0 + f1), max_relative = 1e-12);
        }
    }

    #[test]
    fn eta_times_marginal_is_half_class1_density() {
        let mut rng = derive_stream(3, 0);
        for kind in [SpecKind::Setting1, SpecKind::Setting2, SpecKind::Setting3] {
            for d in [1, 2, 5] {
                let s = spec(kind, d);
                for _ in 0..100 {
                    let x = s.sample_features(&mut rng);
                    let lhs = s.eta_at(&x) * s.marginal_at(&x);
                    let rhs = 0.5 * s.class_density(1, &x).unwrap();
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn bayes_labels() {
        let e1 = spec(SpecKind::Example1, 2);
        assert_eq!(bayes_label(&e1, &[0.8, 0.0]).unwrap(), 1);
        let e2 = spec(SpecKind::Example2, 2);
        assert_eq!(bayes_label(&e2, &[0.3, 0.0]).unwrap(), 0);
        assert!(bayes_label(&e2, &[0.3]).is_err());
    }

    #[test]
    fn setting1_bayes_label_flips_once_on_grid() {
        let s = spec(SpecKind::Setting1, 1);
        let phi = |x: f64, m: f64, sd: f64| (-(x - m).powi(2) / (2.0 * sd * sd)).exp() / sd;
        let grid: Vec<f64> = (0..=4000).map(|i| -1.0 + 3.0 * i as f64 / 4000.0).collect();
        let labels: Vec<u8> = grid.iter().map(|&x| bayes_label(&s, &[x]).unwrap()).collect();
        let flips: Vec<usize> = (1..grid.len()).filter(|&i| labels[i] != labels[i - 1]).collect();
        // f1/f0 crosses 1 twice on R; only the crossing near 0.38 lies in [-1, 2]
        assert_eq!(flips.len(), 1);
        for &i in &flips {
            let (a, b) = (grid[i - 1], grid[i]);
            let ra = phi(a, 0.0, 1.0) / phi(a, 1.0, 0.5);
            let rb = phi(b, 0.0, 1.0) / phi(b, 1.0, 0.5);
            assert!((ra - 1.0) * (rb - 1.0) <= 0.0);
        }
    }

    #[test]
    fn example1_derivatives_closed_form() {
        let s = spec(SpecKind::Example1, 2);
        let x = [0.5, 0.5];
        let dv = derivatives(&s, &x).unwrap();
        assert_eq!(dv.eta_grad, vec![1.0, 1.0]);
        assert_eq!(dv.eta_hess_diag, vec![2.0, 2.0]);
        let c = s.example1_normalizer();
        for (g, xj) in dv.fbar_grad.iter().zip(&x) {
            assert_relative_eq!(*g, -2.0 * c * xj * 0.5 * 2.0, max_relative = 1e-14);
        }
        assert!(derivatives(&s, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn example2_derivatives() {
        let s = spec(SpecKind::Example2, 2);
        let dv = derivatives(&s, &[0.4, 0.3]).unwrap();
        assert_eq!(dv.eta_grad, vec![1.0, 0.0]);
        assert_eq!(dv.eta_hess_diag, vec![0.0, 0.0]);
        assert!(derivatives(&s, &[1.2, 0.3]).is_err());
    }

    /// Central differences of eta, its gradient and f.
    fn fd_check(s: &DistributionSpec, x: &[f64]) {
        let h = 1e-5;
        let dv = s.derivatives_at(x).unwrap();
        let scale = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-3);
        let (gs, hs, fs) = (scale(&dv.eta_grad), scale(&dv.eta_hess_diag), scale(&dv.fbar_grad));
        for j in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let eg = (s.eta_at(&xp) - s.eta_at(&xm)) / (2.0 * h);
            let eh = (s.eta_at(&xp) - 2.0 * s.eta_at(x) + s.eta_at(&xm)) / (h * h);
            let fg = (s.marginal_at(&xp) - s.marginal_at(&xm)) / (2.0 * h);
            assert!((eg - dv.eta_grad[j]).abs() < 1e-6 * gs, "{:?} eta_j", s.kind());
            assert!((eh - dv.eta_hess_diag[j]).abs() < 1e-3 * hs, "{:?} eta_jj", s.kind());
            assert!((fg - dv.fbar_grad[j]).abs() < 1e-6 * fs, "{:?} f_j", s.kind());
        }
    }

    #[test]
    fn settings_derivatives_match_finite_differences() {
        let mut rng = derive_stream(4, 0);
        for kind in [SpecKind::Setting1, SpecKind::Setting2, SpecKind::Setting3] {
            for d in [1, 2, 3] {
                let s = spec(kind, d);
                for _ in 0..10 {
                    let x: Vec<f64> = (0..d).map(|_| 2.0 * rng.uniform() - 0.5).collect();
                    fd_check(&s, &x);
                }
            }
        }
        fd_check(&spec(SpecKind::Example2, 2), &[0.3, 0.4]);
        fd_check(&spec(SpecKind::Example2, 2), &[0.7, -2.5]);
        fd_check(&spec(SpecKind::Example1, 3), &[0.2, -0.4, 0.1]);
    }

    #[test]
    fn bridge_matches_tails_and_mass() {
        let b = BridgeCoefficients::solve();
        let tail = (-1.0f64).exp() / 2.0;
        for t in [-1.0, 1.0] {
            assert_relative_eq!(b.value(t), tail, max_relative = 1e-13);
            assert_relative_eq!(b.first(t), -t * tail, max_relative = 1e-13);
            assert_relative_eq!(b.second(t), tail, max_relative = 1e-13);
        }
        assert!((b.mass() + 1.0 / E - 1.0).abs() < 1e-14);
        let grid: Vec<f64> = (0..10_000).map(|i| -1.0 + 2.0 * i as f64 / 9_999.0).collect();
        assert!(grid.iter().all(|&t| b.value(t) > 0.0 && b.value(t) <= b.a0));
    }

    #[test]
    fn density_sup_examples_and_setting3() {
        let e1 = spec(SpecKind::Example1, 3);
        assert_eq!(e1.density_sup(), e1.marginal_at(&[0.0; 3]));
        let e2 = spec(SpecKind::Example2, 2);
        assert_relative_eq!(e2.density_sup(), 2.0 * e2.bridge().a0);
        for d in [1usize, 2, 5] {
            let s = spec(SpecKind::Setting3, d);
            let h = (d / 2) as i32;
            let rest = (d as i32) - h;
            let want = PI.powi(-h) * 0.5 * (PI.powi(-rest) + (2.0 * PI).powf(-rest as f64 / 2.0));
            assert_relative_eq!(s.density_sup(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn density_sup_dominates_samples() {
        let mut rng = derive_stream(5, 0);
        for kind in [SpecKind::Setting1, SpecKind::Setting2] {
            for d in [1, 2, 5] {
                let s = spec(kind, d);
                let sup = s.density_sup();
                for _ in 0..2000 {
                    let x = s.sample_features(&mut rng);
                    assert!(s.marginal_at(&x) <= sup * (1.0 + 1e-12));
                }
                // also against a coarse random search around the component means
                for _ in 0..2000 {
                    let x: Vec<f64> = (0..d).map(|_| 2.0 * rng.uniform() - 0.5).collect();
                    assert!(s.marginal_at(&x) <= sup * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn degenerate_eta_gives_zero_bayes_risk() {
        struct Pure;
        impl ClassModel for Pure {
            fn dim(&self) -> usize {
                1
            }
            fn sample_pair(&self, rng: &mut RngStream) -> Sample {
                Sample { features: vec![rng.uniform()], label: 1 }
            }
            fn eta_at(&self, _: &[f64]) -> f64 {
                1.0
            }
            fn marginal_at(&self, _: &[f64]) -> f64 {
                1.0
            }
        }
        let r = bayes_risk_mc(&Pure, 1000, &mut derive_stream(6, 0)).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.se, 0.0);
        assert!(bayes_risk_mc(&Pure, 10, &mut derive_stream(6, 0)).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = spec(SpecKind::Setting2, 5);
        let a = sample_unlabelled(&s, 50, &mut derive_stream(7, 1)).unwrap();
        let b = sample_unlabelled(&s, 50, &mut derive_stream(7, 1)).unwrap();
        assert_eq!(a, b);
        let one = sample_unlabelled(&s, 1, &mut derive_stream(7, 1)).unwrap();
        assert_eq!((one.len(), one.dim()), (1, 5));
    }

    #[test]
    fn gamma_helper_agrees() {
        assert_relative_eq!(ln_gamma_fn(4.0), 6f64.ln(), max_relative = 1e-13);
    }
}
