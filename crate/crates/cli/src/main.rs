//! `localknn`: run the local-k nearest-neighbour simulation benchmarks.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use localknn::distributions::{DistributionSpec, SpecKind};
use localknn::experiments::{
    bayes_risk, kde_check, parse_methods, run_experiment, run_rate_experiment, write_rate_results,
    write_results, BandwidthPolicy, Execution, ExperimentConfig, Method, OutputFormat, RateConfig,
};
use localknn::theory::expansion_constants;

#[derive(Parser, Debug)]
#[command(name = "localknn", version, about = "Local-k nearest-neighbour classification benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo comparison of knn, oracle and semi-supervised rules.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate of the Bayes risk.
    BayesRisk(BayesArgs),
    /// Excess-risk expansion constants on the Bayes boundary (JSON).
    Constants(ConstantsArgs),
    /// Regret of one method over a grid of training sizes, with a slope fit.
    Rate(RateArgs),
    /// Integral and sup-norm error of a KDE fitted to unlabelled draws (JSON).
    KdeCheck(KdeArgs),
}

/// Experiment settings; any flag given overrides the config file.
#[derive(Args, Debug, Default)]
struct ExperimentFlags {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spec: Option<SpecKind>,
    #[arg(long)]
    dim: Option<usize>,
    /// Unlabelled sample size.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `reference` or `theoretical:A,GAMMA`.
    #[arg(long)]
    bandwidth: Option<BandwidthPolicy>,
    /// Monte Carlo draws for the Bayes risk.
    #[arg(long)]
    bayes_mc: Option<usize>,
    /// Run repetitions on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: ExperimentFlags,
    /// Labelled training size.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated subset of knn,oracle,ss.
    #[arg(long)]
    methods: Option<String>,
    /// Use this B for the local rules instead of cross-validating it.
    #[arg(long = "fixed-B")]
    fixed_b: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct BayesArgs {
    #[arg(long)]
    spec: SpecKind,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1_000_000)]
    mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    /// example1 or example2.
    #[arg(long)]
    spec: SpecKind,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Evaluate B3 at this B (the optimal B is reported regardless).
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long, default_value_t = 1024)]
    nodes: usize,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[command(flatten)]
    common: ExperimentFlags,
    #[arg(long)]
    method: Method,
    /// Comma-separated, strictly increasing training sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n_grid: Vec<usize>,
    #[arg(long = "fixed-B")]
    fixed_b: Option<f64>,
    /// CSV, or JSON when the path ends in `.json`; stdout CSV when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KdeArgs {
    #[arg(long)]
    spec: SpecKind,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Lattice nodes per axis.
    #[arg(long, default_value_t = 201)]
    grid_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "reference")]
    bandwidth: BandwidthPolicy,
}

/// Usage problems exit with 1, failures while running with 2.
enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn base_config(flags: &ExperimentFlags) -> Result<ExperimentConfig, Failure> {
    let mut c = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = flags.spec {
        c.spec = v;
    }
    if let Some(v) = flags.dim {
        c.dim = v;
    }
    if let Some(v) = flags.m {
        c.m = v;
    }
    if let Some(v) = flags.test_size {
        c.test_size = v;
    }
    if let Some(v) = flags.reps {
        c.reps = v;
    }
    if let Some(v) = flags.seed {
        c.master_seed = v;
    }
    if let Some(v) = flags.bandwidth {
        c.bandwidth = v;
    }
    if let Some(v) = flags.bayes_mc {
        c.bayes_draws = v;
    }
    if flags.serial {
        c.execution = Execution::Serial;
    }
    Ok(c)
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(runtime)?);
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut c = base_config(&args.common)?;
    if let Some(n) = args.n {
        c.n = n;
    }
    if let Some(m) = &args.methods {
        c.methods = parse_methods(m).map_err(usage)?;
    }
    if args.fixed_b.is_some() {
        c.fixed_b = args.fixed_b;
    }
    c.validate().map_err(usage)?;
    let result = run_experiment(&c).map_err(runtime)?;
    match &args.out {
        Some(path) => write_results(&result, path, args.format).map_err(runtime),
        None => {
            let body = match args.format {
                OutputFormat::Csv => localknn::experiments::results_csv(&result).map_err(runtime)?,
                OutputFormat::Json => serde_json::to_string_pretty(&result).map_err(runtime)? + "\n",
            };
            print!("{body}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct BayesReport {
    spec: SpecKind,
    dim: usize,
    draws: usize,
    seed: u64,
    estimate: f64,
    se: f64,
}

fn bayes(args: BayesArgs) -> Result<(), Failure> {
    let spec = DistributionSpec::new(args.spec, args.dim).map_err(usage)?;
    if args.mc < 100 {
        return Err(usage("--mc must be at least 100"));
    }
    let r = bayes_risk(&spec, args.mc, args.seed).map_err(runtime)?;
    print_json(&BayesReport {
        spec: args.spec,
        dim: args.dim,
        draws: args.mc,
        seed: args.seed,
        estimate: r.estimate,
        se: r.se,
    })
}

#[derive(Serialize)]
struct ConstantsReport {
    spec: SpecKind,
    dim: usize,
    #[serde(flatten)]
    constants: localknn::theory::ExpansionConstants,
    optimal_b: Option<f64>,
    b3_at_optimal_b: Option<f64>,
}

fn constants(args: ConstantsArgs) -> Result<(), Failure> {
    if !matches!(args.spec, SpecKind::Example1 | SpecKind::Example2) {
        return Err(usage("constants are available for example1 and example2 only"));
    }
    let dim = if args.spec == SpecKind::Example2 { 2 } else { args.dim };
    let spec = DistributionSpec::new(args.spec, dim).map_err(usage)?;
    if let Some(b) = args.b {
        if !(b > 0.0 && b.is_finite()) {
            return Err(usage("--B must be positive"));
        }
    }
    if args.nodes < 16 {
        return Err(usage("--nodes must be at least 16"));
    }
    let constants = expansion_constants(&spec, args.nodes, args.b).map_err(runtime)?;
    let quad = localknn::theory::boundary_quadrature(&spec, args.nodes).map_err(runtime)?;
    let optimal_b = localknn::theory::optimal_b(&spec, &quad).map_err(runtime)?;
    let b3_at_optimal_b = optimal_b
        .map(|b| localknn::theory::constant_b3(&spec, &quad, b))
        .transpose()
        .map_err(runtime)?;
    print_json(&ConstantsReport {
        spec: args.spec,
        dim,
        constants,
        optimal_b,
        b3_at_optimal_b,
    })
}

fn rate(args: RateArgs) -> Result<(), Failure> {
    let base = base_config(&args.common)?;
    let cfg = RateConfig {
        base,
        method: args.method,
        n_grid: args.n_grid.clone(),
        fixed_b: args.fixed_b,
    };
    if cfg.n_grid.len() < 3 || cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--n-grid needs at least 3 strictly increasing sizes"));
    }
    let check = ExperimentConfig {
        n: cfg.n_grid[0],
        methods: vec![cfg.method],
        fixed_b: cfg.fixed_b,
        ..cfg.base.clone()
    };
    check.validate().map_err(usage)?;
    let result = run_rate_experiment(&cfg).map_err(runtime)?;
    if result.warning {
        eprintln!("warning: some sizes had nonpositive estimated regret and were left out of the fit");
    }
    match &args.out {
        Some(path) => write_rate_results(&result, path, OutputFormat::from_path(path)).map_err(runtime),
        None => {
            print!("{}", localknn::experiments::rate_csv(&result).map_err(runtime)?);
            Ok(())
        }
    }
}

fn kde(args: KdeArgs) -> Result<(), Failure> {
    let spec = DistributionSpec::new(args.spec, args.dim).map_err(usage)?;
    if args.m < 2 || args.grid_points < 2 {
        return Err(usage("--m and --grid-points must be at least 2"));
    }
    let report = kde_check(&spec, args.m, args.grid_points, args.bandwidth, args.seed).map_err(runtime)?;
    print_json(&report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::BayesRisk(a) => bayes(a),
        Command::Constants(a) => constants(a),
        Command::Rate(a) => rate(a),
        Command::KdeCheck(a) => kde(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
