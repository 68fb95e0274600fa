mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Runtime(String),
}

impl From<qvic::Error> for CliError {
    fn from(e: qvic::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "qvic", version, about = "Environment-induced coherence and inverse design")]
struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic curves: the reflector coherence or vacuum merit slices.
    Analytic(AnalyticArgs),
    /// Iterative or single-pass block placement.
    Optimize(OptimizeArgs),
    /// Vacuum error budget and the reflector benchmark.
    Validate(ValidateArgs),
    /// Antinodes of the reflector curve.
    Antinodes(AntinodeArgs),
    /// Dump the Green's field of a geometry over the region.
    Greens(GreensArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Curve {
    Reflector,
    Merit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Plane {
    X,
    Y,
    Z,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    pub curve: Curve,
    /// Reflector: lower ζ bound (excluded). Merit: ignored.
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    /// Reflector: upper ζ bound (included).
    #[arg(long, default_value_t = 3.0)]
    pub stop: f64,
    #[arg(long, default_value_t = 0.005)]
    pub step: f64,
    /// Merit: half-width of each slice in ζ.
    #[arg(long, default_value_t = 3.0)]
    pub extent: f64,
    /// Merit: planes to slice, by the coordinate held at zero.
    #[arg(long, value_delimiter = ',', default_values = ["x", "y", "z"])]
    pub planes: Vec<Plane>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub single_pass: bool,
    /// Continue from the trace and geometry in the output directory.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [12usize])]
    pub resolutions: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// ζ grid as start:stop:step.
    #[arg(long, default_value = "0.3:2.0:0.1")]
    pub zeta: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AntinodeArgs {
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    /// Run one optimisation with the atom at each antinode.
    #[arg(long)]
    pub optimize: bool,
    /// With --optimize, only write the per-antinode configurations.
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GreensArgs {
    pub config: Option<PathBuf>,
    /// Geometry file; the scenario's empty geometry when absent.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Sample the whole non-absorbing box instead of the region.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Analytic(a) => commands::analytic(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Antinodes(a) => commands::antinodes(&a),
        Command::Greens(a) => commands::greens(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
