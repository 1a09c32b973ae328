use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spatial_select::{CovarianceModel, ProblemInstance, Region};
use spatial_select_cli::instance::{generate_instance, parse_region, read_omega_csv};
use spatial_select_cli::{bench, run, run_verify, BenchmarkSuite, CliError, MethodChoice, Result, RunConfig, VerifyOptions};

#[derive(Parser)]
#[command(name = "spatial-select", version, about = "Greedy measurement placement for squared-exponential fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select measurement locations for one instance.
    Solve(SolveArgs),
    /// Run the grid-vs-centroid benchmark protocol.
    Bench(BenchArgs),
    /// Run the built-in structural and numerical checks.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "both")]
    method: MethodChoice,
    /// Grid points per axis.
    #[arg(long)]
    rho: Option<usize>,
    /// Size the grid to at least twice the number of prediction points.
    #[arg(long)]
    matched: bool,
    /// CSV of prediction points with header `x,y[,z...]`.
    #[arg(long)]
    omega_file: Option<PathBuf>,
    /// Number of random prediction points when no file is given.
    #[arg(long, default_value_t = 20)]
    n_pred: usize,
    /// Measurement region as `lo:hi` per axis, e.g. `0:40,0:40`. Defaults to
    /// the bounding box of the prediction points, or `0:40,0:40` when generating.
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 12.87)]
    sigma0: f64,
    #[arg(long, default_value_t = 8.33)]
    length_scale: f64,
    #[arg(long, default_value_t = 0.0361)]
    noise_var: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// JSON suite description; the built-in suite when absent.
    #[arg(long)]
    suite_file: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Override instances per cell.
    #[arg(long)]
    instances: Option<usize>,
    /// Worker threads for candidate sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    sweep_size: usize,
    #[arg(long, default_value_t = spatial_select::analysis::DEFAULT_RESOLUTION)]
    resolution: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

fn solve(args: SolveArgs) -> Result<()> {
    let model = CovarianceModel::new(args.sigma0, args.length_scale, args.noise_var)?;
    let region = args.region.as_deref().map(parse_region).transpose()?;
    let instance = match &args.omega_file {
        Some(path) => {
            let omega = read_omega_csv(path)?;
            let region = match region {
                Some(r) => r,
                None => Region::bounding(&omega)?,
            };
            ProblemInstance::new(region, omega, args.budget, model)?
        }
        None => {
            let region = match region {
                Some(r) => r,
                None => Region::square(40.0)?,
            };
            generate_instance(&region, args.n_pred, args.budget, model, args.seed)?
        }
    };
    let config = RunConfig {
        method: args.method,
        rho: args.rho,
        matched_resource: args.matched,
        seed: args.seed,
        repeats: args.repeats,
        output_path: args.out.clone(),
    };
    let output = run(&config, &instance)?;
    let text = serde_json::to_string_pretty(&output).expect("report serializes");
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => println!("{text}"),
    }
    for r in &output.reports {
        eprintln!(
            "{:<8} ground set {:>6}  objective {:>14.6}  mse {:>14.6}  {:.3}s",
            r.method.to_string(),
            r.ground_set_size,
            r.objective,
            r.total_mse,
            r.elapsed_secs
        );
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let mut suite = match &args.suite_file {
        Some(path) => BenchmarkSuite::from_file(path)?,
        None => BenchmarkSuite::default(),
    };
    if let Some(n) = args.instances {
        suite.instances_per_cell = n;
    }
    if let Some(seed) = args.seed {
        suite.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    let out = pool.install(|| bench(&suite, &args.out_dir))?;
    for s in &out.summary {
        eprintln!(
            "{:<6} {:<9} {:<8} mse {:>12.4} +- {:<10.4} time {:>8.3}s",
            s.env,
            s.regime,
            s.method.to_string(),
            s.mse_mean,
            s.mse_std,
            s.seconds_mean
        );
    }
    eprintln!("wrote {}", args.out_dir.display());
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let report = run_verify(&VerifyOptions {
        sweep_size: args.sweep_size,
        resolution: args.resolution,
        seed: args.seed,
    })?;
    for c in &report.checks {
        println!("[{}] {:<20} {:>8.3}s  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => run_bench(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
