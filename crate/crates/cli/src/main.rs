//! `carpool`: generate, simulate, solve, prompt, run and ablate carpool
//! dispatch instances.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "carpool", version, about = "Ride-pooling dispatch MIP workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory; manifest.json is written at its root.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed, fanned out to named sub-seeds [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-instance work [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProposerKind {
    Mock,
    Stochastic,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    /// Sample positions uniformly in a 100 x 100 box.
    Random,
    /// Snapshot matching rounds of a synthetic simulation.
    Sim,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of instances [default: 100]
    #[arg(long)]
    pub count: Option<usize>,
    /// Sets m = n = p = SIZE for random instances [default: 5]
    #[arg(long)]
    pub size: Option<usize>,
    /// Empty vehicles per instance (overrides --size)
    #[arg(long)]
    pub m: Option<usize>,
    /// One-order vehicles per instance (overrides --size)
    #[arg(long)]
    pub n: Option<usize>,
    /// Users per instance (overrides --size)
    #[arg(long)]
    pub p: Option<usize>,
    /// Where instances come from.
    #[arg(long, value_enum, default_value = "random")]
    pub source: Source,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Side length of the square grid network, in cells [default: 30]
    #[arg(long)]
    pub grid: Option<usize>,
    /// Fleet size [default: 20]
    #[arg(long)]
    pub vehicles: Option<usize>,
    /// Synthetic order count when no order file is given [default: 100]
    #[arg(long)]
    pub num_orders: Option<usize>,
    /// Seconds covered by synthetic orders [default: 1800]
    #[arg(long)]
    pub time_span: Option<f64>,
    /// Seconds between matching rounds [default: 30]
    #[arg(long)]
    pub batch_window: Option<f64>,
    /// Vehicle speed in cells per second [default: 0.1]
    #[arg(long)]
    pub speed: Option<f64>,
    /// Fraction of grid cells blocked at random [default: 0]
    #[arg(long)]
    pub blocked_density: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Order CSV (order_id,request_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon);
    /// synthetic orders are generated when absent.
    #[arg(long)]
    pub orders: Option<PathBuf>,
    /// Skip malformed CSV rows instead of stopping at the first one.
    #[arg(long)]
    pub skip_bad_rows: bool,
    /// Grid cell size in projected units (km) for CSV input [default: 0.25]
    #[arg(long)]
    pub cell_size: Option<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Branch-and-bound node limit [default: 10000000]
    #[arg(long)]
    pub max_nodes: Option<u64>,
    /// Wall-clock limit per solve in seconds [default: 60]
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Instance JSON, JSON array or JSONL file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Also export each model in LP text format.
    #[arg(long)]
    pub lp: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[command(flatten)]
    pub common: Common,
    /// Instance JSON; an `exemplars` array in it supplies previous solutions.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of exemplar solutions to embed. Taken from the file's
    /// `exemplars` when present, else from the exact solver's first incumbents.
    #[arg(long, default_value_t = 0)]
    pub exemplars: usize,
    /// Also print the prompt to stdout.
    #[arg(long)]
    pub print: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ProposerArgs {
    /// Solution proposer.
    #[arg(long, value_enum, default_value = "stochastic")]
    pub proposer: ProposerKind,
    /// Directory of numbered .txt responses for the mock proposer.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Exemplars shown per round [default: 3]
    #[arg(long)]
    pub max_exemplars: Option<usize>,
    /// Stop a run once it reaches the proven optimum.
    #[arg(long)]
    pub early_stop: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Instance JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Temperature schedule: fall, rise, rise_then_fall, constant or single.
    #[arg(long, default_value = "fall", conflicts_with = "temperatures")]
    pub schedule: String,
    /// Explicit per-round temperatures, e.g. 1,0.5,0.01
    #[arg(long, value_delimiter = ',')]
    pub temperatures: Option<Vec<f64>>,
    /// Skip the exact solve, so no optimality gaps are reported.
    #[arg(long)]
    pub no_reference: bool,
    #[command(flatten)]
    pub proposer: ProposerArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Instances to evaluate; random instances are generated when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Generated instance count [default: 100]
    #[arg(long)]
    pub count: Option<usize>,
    /// Generated instance size, m = n = p [default: 5]
    #[arg(long)]
    pub size: Option<usize>,
    /// Schedules to compare [default: all five]
    #[arg(long, value_delimiter = ',')]
    pub schedules: Option<Vec<String>>,
    #[command(flatten)]
    pub proposer: ProposerArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write dispatch instances as JSONL.
    Generate(GenerateArgs),
    /// Run the grid simulator and write per-round snapshots.
    Simulate(SimulateArgs),
    /// Solve instances exactly and write results with incumbent logs.
    Solve(SolveArgs),
    /// Render the proposer prompt for an instance.
    Prompt(PromptArgs),
    /// Run one temperature schedule on one instance.
    Run(RunArgs),
    /// Compare temperature schedules over many instances.
    Ablate(AblateArgs),
}

fn main() -> ExitCode {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into());
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Solve(a) => commands::solve(a),
        Command::Prompt(a) => commands::prompt(a),
        Command::Run(a) => commands::run(a),
        Command::Ablate(a) => commands::ablate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
