//! `suc`: solve, benchmark and inspect two-stage stochastic unit commitment
//! instances.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use suc_core::benders::validate_stabilization;
use suc_core::extensive::build_extensive_form;
use suc_core::harness::{benchmark, run_algorithm, sensitivity, RunConfig};
use suc_core::io::{
    generate_synthetic, parse_instance, write_csv, write_instance, write_report, write_trace, SolveReport,
    SyntheticConfig,
};
use suc_core::{Algorithm, Error, Executor, Instance};

#[derive(Parser, Debug)]
#[command(name = "suc", version, about = "Two-stage stochastic unit commitment solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance with one algorithm.
    Solve(SolveArgs),
    /// Run every algorithm for several scenario counts.
    Benchmark(BenchmarkArgs),
    /// Sweep the in-out parameters of column-row generation.
    Sensitivity(SensitivityArgs),
    /// Write a synthetic instance.
    Generate(GenerateArgs),
    /// Parse and validate an instance file.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Instance file (JSON).
    instance: PathBuf,
    /// Wall-clock budget per run, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Target relative optimality gap.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Keep only the first N scenarios (probabilities renormalized).
    #[arg(long)]
    scenarios: Option<usize>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, short, default_value = "crg")]
    algorithm: Algorithm,
    /// Also write the extensive form to this LP file.
    #[arg(long)]
    export_lp: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: Common,
    /// Scenario counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    counts: Vec<usize>,
    /// Algorithms, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "bb,bd,crg")]
    algorithms: Vec<Algorithm>,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "0,0.3,0.5,1")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.3,0.5,1")]
    betas: Vec<f64>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Destination file.
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    generators: usize,
    /// Number of two-mode combined-cycle units among the generators.
    #[arg(long, default_value_t = 1)]
    combined_cycle: usize,
    #[arg(long, default_value_t = 6)]
    horizon: usize,
    #[arg(long, default_value_t = 3)]
    scenarios: usize,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    instance: PathBuf,
}

/// A failure with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) | Error::SolveStatus { .. } => 3,
            Error::InvalidInstance(_) | Error::Parse { .. } | Error::Dimension(_) => 2,
            Error::Io { .. } | Error::InfeasibleColumn { .. } => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

#[derive(Serialize)]
struct PoolRow<'a> {
    generator: &'a str,
    columns: usize,
}

impl Common {
    fn validate(&self) -> CliResult {
        validate_stabilization(self.alpha, self.beta, self.epsilon, self.time_limit)
            .map_err(|e| Failure::usage(e.to_string()))?;
        if self.scenarios == Some(0) {
            return Err(Failure::usage("--scenarios must be at least 1"));
        }
        Ok(())
    }

    fn config(&self) -> RunConfig {
        RunConfig {
            time_limit: self.time_limit,
            epsilon: self.epsilon,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
        }
    }

    fn load(&self) -> std::result::Result<Instance, Failure> {
        let instance = load_instance(&self.instance)?;
        Ok(match self.scenarios {
            Some(n) => instance.truncate_scenarios(n),
            None => instance,
        })
    }

    fn prepare_output(&self) -> CliResult {
        fs::create_dir_all(&self.output).map_err(|e| Failure {
            code: 1,
            message: format!("{}: {e}", self.output.display()),
        })
    }
}

fn load_instance(path: &Path) -> std::result::Result<Instance, Failure> {
    if !path.exists() {
        return Err(Failure::usage(format!("{}: no such file", path.display())));
    }
    Ok(parse_instance(path)?)
}

fn cmd_solve(args: &SolveArgs) -> CliResult {
    let c = &args.common;
    c.validate()?;
    let instance = c.load()?;
    c.prepare_output()?;
    if let Some(path) = &args.export_lp {
        build_extensive_form(&instance, false)?.model.write_lp(path)?;
    }
    let exec = Executor::with_workers(c.workers);
    let (solution, trace) = run_algorithm(&instance, args.algorithm, &c.config(), exec)?;
    let report = SolveReport::new(&solution, &instance);
    write_report(&report, &c.output.join("report.json"))?;
    write_trace(&trace, &c.output.join("trace.csv"))?;
    if !solution.column_counts.is_empty() {
        let rows: Vec<PoolRow> = instance
            .generators
            .iter()
            .zip(&solution.column_counts)
            .map(|(g, &n)| PoolRow {
                generator: &g.name,
                columns: n,
            })
            .collect();
        write_csv(&rows, &c.output.join("columns.csv"))?;
    }
    println!(
        "{} status={:?} objective={:.6} bound={:.6} gap={:.3e} outer={:.2}s inner={:.2}s total={:.2}s",
        solution.algorithm,
        solution.status,
        solution.objective,
        solution.lower_bound,
        solution.gap(),
        solution.timings.outer,
        solution.timings.inner,
        solution.timings.total
    );
    if solution.objective.is_finite() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "no feasible schedule found".into(),
        })
    }
}

fn cmd_benchmark(args: &BenchmarkArgs) -> CliResult {
    let c = &args.common;
    c.validate()?;
    if args.counts.iter().any(|&n| n == 0) {
        return Err(Failure::usage("--counts entries must be at least 1"));
    }
    let instance = c.load()?;
    c.prepare_output()?;
    let exec = Executor::with_workers(c.workers);
    let mut write_error = None;
    let rows = benchmark(&instance, &args.counts, &args.algorithms, &c.config(), exec, |n, alg, _, trace| {
        let path = c.output.join(format!("trace_{alg}_{n}.csv"));
        if let Err(e) = write_trace(trace, &path) {
            write_error.get_or_insert(e);
        }
    });
    if let Some(e) = write_error {
        return Err(e.into());
    }
    write_csv(&rows, &c.output.join("benchmark.csv"))?;
    for r in &rows {
        println!(
            "scenarios={} {} status={} objective={:.6} bound={:.6} gap={:.3e} total={:.2}s",
            r.scenarios, r.algorithm, r.status, r.objective, r.lower_bound, r.gap, r.total_s
        );
    }
    Ok(())
}

fn cmd_sensitivity(args: &SensitivityArgs) -> CliResult {
    let c = &args.common;
    c.validate()?;
    for &a in &args.alphas {
        for &b in &args.betas {
            validate_stabilization(a, b, c.epsilon, c.time_limit).map_err(|e| Failure::usage(e.to_string()))?;
        }
    }
    let instance = c.load()?;
    c.prepare_output()?;
    let exec = Executor::with_workers(c.workers);
    let rows = sensitivity(&instance, &args.alphas, &args.betas, &c.config(), exec);
    write_csv(&rows, &c.output.join("sensitivity.csv"))?;
    for r in &rows {
        println!("alpha={} beta={} status={} gap={:.3e}", r.alpha, r.beta, r.status, r.gap);
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> CliResult {
    if args.combined_cycle > args.generators {
        return Err(Failure::usage("--combined-cycle cannot exceed --generators"));
    }
    if args.horizon < 2 || args.generators == 0 || args.scenarios == 0 {
        return Err(Failure::usage(
            "--horizon must be at least 2; --generators and --scenarios at least 1",
        ));
    }
    let instance = generate_synthetic(&SyntheticConfig {
        seed: args.seed,
        generators: args.generators,
        combined_cycle: args.combined_cycle,
        horizon: args.horizon,
        scenarios: args.scenarios,
    })?;
    if let Some(dir) = args.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure {
            code: 1,
            message: format!("{}: {e}", dir.display()),
        })?;
    }
    write_instance(&instance, &args.output)?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> CliResult {
    let instance = load_instance(&args.instance)?;
    println!(
        "ok: {} generators, {} periods, {} scenarios",
        instance.generators.len(),
        instance.horizon,
        instance.scenarios.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
