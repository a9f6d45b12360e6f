use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, SpecKind};
use crate::error::{Error, Result};
use crate::select::DEFAULT_FOLDS;

/// Monte Carlo draws used for the Bayes risk unless configured otherwise.
pub const DEFAULT_BAYES_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Standard `k`-nearest neighbours with cross-validated `k`.
    Knn,
    /// Local rule driven by the true marginal density.
    Oracle,
    /// Local rule driven by a kernel density estimate from unlabelled data.
    Ss,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Knn, Method::Oracle, Method::Ss];

    pub fn name(self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::Oracle => "oracle",
            Method::Ss => "ss",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param("method", format!("unknown method `{s}`")))
    }
}

/// Parses a comma-separated method list such as `knn,oracle,ss`.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::param("methods", "empty method list"));
    }
    Ok(out)
}

/// How the semi-supervised method picks its KDE bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BandwidthPolicy {
    /// Normal-scale diagonal bandwidths from the unlabelled sample.
    #[default]
    Reference,
    /// Isotropic `h = A m^{-1/(d + 2 gamma)}`.
    Theoretical { a: f64, gamma: f64 },
}

impl FromStr for BandwidthPolicy {
    type Err = Error;

    /// `reference` or `theoretical:A,GAMMA`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "reference" {
            return Ok(BandwidthPolicy::Reference);
        }
        let bad = || Error::param("bandwidth", format!("expected `reference` or `theoretical:A,GAMMA`, got `{s}`"));
        let rest = s.strip_prefix("theoretical:").ok_or_else(bad)?;
        let (a, g) = rest.split_once(',').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let gamma: f64 = g.trim().parse().map_err(|_| bad())?;
        Ok(BandwidthPolicy::Theoretical { a, gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    /// Repetitions spread over the rayon pool; runs serially when the crate
    /// is built without the `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: SpecKind,
    pub dim: usize,
    pub n: usize,
    pub m: usize,
    pub test_size: usize,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub folds: usize,
    pub bandwidth: BandwidthPolicy,
    pub bayes_draws: usize,
    /// Skip cross-validation of `B` for the local rules and use this value.
    pub fixed_b: Option<f64>,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spec: SpecKind::Setting1,
            dim: 1,
            n: 200,
            m: 1000,
            test_size: 1000,
            reps: 200,
            methods: Method::ALL.to_vec(),
            master_seed: 0,
            folds: DEFAULT_FOLDS,
            bandwidth: BandwidthPolicy::Reference,
            bayes_draws: DEFAULT_BAYES_DRAWS,
            fixed_b: None,
            execution: Execution::Parallel,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::param("reps", "need at least 2 repetitions"));
        }
        if self.test_size == 0 {
            return Err(Error::param("test_size", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("methods", "empty method list"));
        }
        if self.folds < 2 {
            return Err(Error::param("folds", "need at least 2 folds"));
        }
        if self.n < 4 || self.n < self.folds {
            return Err(Error::param("n", "need at least 4 labelled points and one per fold"));
        }
        if self.methods.contains(&Method::Ss) && self.m < 2 {
            return Err(Error::param("m", "the semi-supervised method needs at least 2 unlabelled points"));
        }
        if self.bayes_draws < 100 {
            return Err(Error::param("bayes_draws", "need at least 100 draws"));
        }
        if let Some(b) = self.fixed_b {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Nonpositive { what: "fixed B", value: b });
            }
        }
        if let BandwidthPolicy::Theoretical { a, gamma } = self.bandwidth {
            crate::density::bandwidth_theoretical(a, self.m.max(1), self.dim.max(1), gamma)?;
        }
        self.distribution().map(|_| ())
    }

    pub fn distribution(&self) -> Result<DistributionSpec> {
        DistributionSpec::new(self.spec, self.dim)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
