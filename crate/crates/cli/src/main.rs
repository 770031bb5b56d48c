//! `hrr`: index integrals and identity checks for Hermitian metrics.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hrr_core::quadrature::Method;

/// Exit code for a result outside tolerance.
const EXIT_TOLERANCE: u8 = 1;
/// Exit code for usage errors, failed preconditions and invalid input.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "hrr", version, about = "Index integrals and geometric identity checks on Hermitian manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate index densities and compare with the expected index
    Index(IndexArgs),
    /// Measure residuals of geometric identities at sample points
    Check(CheckArgs),
    /// Index values for a sequence of quadrature levels
    Convergence(ConvergenceArgs),
    /// Probe the Dolbeault Laplacian on the Hopf manifold
    Laplacian(LaplacianArgs),
    /// Parse and validate a metric file
    Parse(ParseArgs),
}

#[derive(Args, Clone, Debug)]
pub struct Target {
    /// Built-in manifold (cp1, cp2, torus2, torus4, hopf2, hopf3)
    #[arg(value_name = "MANIFOLD")]
    pub name: Option<String>,
    #[arg(long, value_name = "MANIFOLD", conflicts_with = "name")]
    pub manifold: Option<String>,
    /// Metric file instead of a built-in manifold
    #[arg(long, value_name = "PATH", conflicts_with_all = ["name", "manifold"])]
    pub metric_file: Option<PathBuf>,
    /// Charge k of the twist O(k) (CP¹ only)
    #[arg(short = 'k', long = "twist", allow_hyphen_values = true)]
    pub twist: Option<i64>,
}

#[derive(Args, Clone, Debug)]
pub struct Numerics {
    /// gauss, qmc or mc (default: gauss up to real dimension 4, qmc above)
    #[arg(long)]
    pub method: Option<Method>,
    /// Density evaluations in total, shared by the coordinate patches
    #[arg(long)]
    pub budget: Option<u64>,
    /// Tolerance (default depends on the command and method)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Finite-difference step
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Use the large default sample counts for QMC and MC
    #[arg(long)]
    pub slow: bool,
}

#[derive(Args, Clone, Debug)]
pub struct Output {
    /// Write the JSON report to this path
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write a CSV table to this path
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    #[command(flatten)]
    pub target: Target,
    /// Comma-separated list of kahler, bismut, unwound, todd, or `all`
    #[arg(long, default_value = "all")]
    pub formula: String,
    /// Integrate even if a formula's validity condition fails
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub numerics: Numerics,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub target: Target,
    /// connections, bianchi, skt, hopf, maurer-cartan or deformation
    #[arg(long)]
    pub suite: String,
    /// Number of sample points
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[command(flatten)]
    pub numerics: Numerics,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long, default_value = "todd")]
    pub formula: String,
    /// Comma-separated levels: Gauss nodes per axis, or QMC/MC points
    #[arg(long)]
    pub levels: Option<String>,
    #[command(flatten)]
    pub numerics: Numerics,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct LaplacianArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[command(flatten)]
    pub numerics: Numerics,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    /// Metric file to check
    #[arg(value_name = "PATH", required_unless_present = "metric_file")]
    pub path: Option<PathBuf>,
    #[arg(long, value_name = "PATH", conflicts_with = "path")]
    pub metric_file: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(hrr_core::Error),
    Io(PathBuf, std::io::Error),
}

impl From<hrr_core::Error> for Failure {
    fn from(e: hrr_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(hrr_core::Error::BudgetExhausted { .. }) => EXIT_TOLERANCE,
            _ => EXIT_USAGE,
        }
    }
}

fn setup_threads() -> Result<usize, Failure> {
    if let Ok(v) = std::env::var("HRR_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Usage(format!("HRR_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool, Failure> {
        let threads = setup_threads()?;
        match &cli.command {
            Command::Index(a) => commands::index(a, threads),
            Command::Check(a) => commands::check(a, threads),
            Command::Convergence(a) => commands::convergence(a, threads),
            Command::Laplacian(a) => commands::laplacian(a, threads),
            Command::Parse(a) => commands::parse(a, threads),
        }
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
