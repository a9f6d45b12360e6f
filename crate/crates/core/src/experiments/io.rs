use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::aggregate::ExperimentResult;
use super::rate::RateResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::param("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

impl OutputFormat {
    /// JSON for a `.json` extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

/// `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn opt6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

#[derive(Serialize)]
struct Row {
    spec: String,
    d: usize,
    n: usize,
    m: usize,
    test_size: usize,
    reps: usize,
    method: String,
    mean_risk: String,
    se: String,
    bayes_risk: String,
    regret_ratio: String,
    ratio_se: String,
    seed: u64,
}

pub fn results_csv(result: &ExperimentResult) -> Result<String> {
    let c = &result.config;
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &result.methods {
        w.serialize(Row {
            spec: c.spec.to_string(),
            d: c.dim,
            n: c.n,
            m: c.m,
            test_size: c.test_size,
            reps: result.reps,
            method: s.method.to_string(),
            mean_risk: sig6(s.mean_risk),
            se: sig6(s.se),
            bayes_risk: sig6(result.bayes_risk),
            regret_ratio: opt6(s.regret_ratio),
            ratio_se: opt6(s.ratio_se),
            seed: c.master_seed,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes one CSV row per method, or the full result as JSON.
pub fn write_results(result: &ExperimentResult, path: &Path, format: OutputFormat) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => results_csv(result)?,
        OutputFormat::Json => serde_json::to_string_pretty(result)? + "\n",
    };
    fs::write(path, body)?;
    Ok(())
}

pub fn read_results_json(path: &Path) -> Result<ExperimentResult> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Serialize)]
struct RateRow {
    spec: String,
    d: usize,
    method: String,
    n: usize,
    mean_risk: String,
    se: String,
    bayes_risk: String,
    regret: String,
    dropped: bool,
    slope: String,
    reference_slope: String,
}

pub fn rate_csv(result: &RateResult) -> Result<String> {
    let c = &result.config;
    let slope = result.fit.map(|f| sig6(f.slope)).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &result.points {
        w.serialize(RateRow {
            spec: c.base.spec.to_string(),
            d: c.base.dim,
            method: c.method.to_string(),
            n: p.n,
            mean_risk: sig6(p.mean_risk),
            se: sig6(p.se),
            bayes_risk: sig6(result.bayes_risk),
            regret: sig6(p.regret),
            dropped: p.dropped,
            slope: slope.clone(),
            reference_slope: sig6(result.reference_slope),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn write_rate_results(result: &RateResult, path: &Path, format: OutputFormat) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => rate_csv(result)?,
        OutputFormat::Json => serde_json::to_string_pretty(result)? + "\n",
    };
    fs::write(path, body)?;
    Ok(())
}
