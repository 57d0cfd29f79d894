use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srir_subspace::io::Domain;

mod commands;
mod error;

#[derive(Parser, Debug)]
#[command(name = "srirdec", version, about = "Direct/residual decomposition of spatial room impulse responses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split an SRIR into direct.wav, residual.wav and traces.csv.
    Decompose(DecomposeArgs),
    /// Render a simulated SRIR and its ground truth.
    Simulate(SimulateArgs),
    /// Windowed covariance rank of an SRIR.
    Rank(RankArgs),
    /// Spatio-spectral errors of decompositions against simulated ground truth.
    Evaluate(EvaluateArgs),
    /// Rooms × arrays × DNRs simulation study.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Geometry table; overrides the config.
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    domain: Option<Domain>,
    #[arg(long)]
    sh_order: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write float64 sidecars of the input and both parts.
    #[arg(long)]
    float64: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario TOML; without it a random room is drawn from --seed.
    #[arg(long, conflicts_with = "seed")]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// array1, array2 or array3.
    #[arg(long)]
    array: Option<String>,
    #[arg(long)]
    dnr_db: Option<f64>,
    #[arg(long, default_value = "raw")]
    domain: Domain,
    #[arg(long)]
    sh_order: Option<usize>,
    #[command(flatten)]
    out: OutArg,
    #[arg(long)]
    float64: bool,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 32)]
    window: usize,
    #[arg(long, default_value_t = 4)]
    hop: usize,
    #[arg(long, default_value_t = 100.0)]
    dr_db: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Directory with direct and residual outputs; repeat for several cases.
    #[arg(long, required = true)]
    estimate: Vec<PathBuf>,
    /// Output directory of `simulate`, one per --estimate.
    #[arg(long, required = true)]
    truth: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose(a) => commands::decompose(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Rank(a) => commands::rank(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
