use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Parser)]
#[command(name = "qsynth", version, about = "Topology-aware quantum circuit synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a circuit for a unitary given as a matrix text file.
    Synth(SynthArgs),
    /// Compare an emitted circuit against a unitary.
    Verify(VerifyArgs),
    /// Fit the heuristic slope from search traces.
    FitHeuristic(FitArgs),
    /// Run the built-in benchmark suite.
    Bench(BenchArgs),
    /// Write a built-in benchmark unitary as a matrix text file.
    Fixture(FixtureArgs),
}

#[derive(Args, Debug, Default)]
pub struct SynthArgs {
    /// Unitary matrix file (first line: dimension, then one row per line).
    pub unitary: PathBuf,
    /// `line:N`, `triangle`, `full:N` or `file:PATH`.
    #[arg(long)]
    pub topology: Option<String>,
    /// `cnot` or `crz`.
    #[arg(long = "gate-set")]
    pub gate_set: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Maximum CNOT count explored.
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub slope: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optimizer restarts per node.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// `cobyla` or `cmaes`.
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Give up after this many seconds.
    #[arg(long = "time-limit")]
    pub time_limit: Option<f64>,
    /// Emit rz/rx(pi/2) pulses instead of u3.
    #[arg(long)]
    pub native: bool,
    /// Write the search trace to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Circuit output file (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// JSON summary file (stderr when omitted).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// key=value file mirroring the flags above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub circuit: PathBuf,
    pub unitary: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Comma-separated benchmark names to trace with breadth-first search.
    #[arg(long, default_value = "qft3,toffoli,fredkin,peres,hhl,or")]
    pub benchmarks: String,
    /// Fit from existing trace files instead of running searches.
    #[arg(long = "trace-file")]
    pub trace_files: Vec<PathBuf>,
    /// Report the affine fit, rather than the fit through the origin, as `slope`.
    #[arg(long)]
    pub affine: bool,
    #[arg(long, default_value_t = qsynth::search::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// `full` (all benchmarks) or `quick`.
    #[arg(long, default_value = "quick")]
    pub suite: String,
    /// Runs per cell; the best result is reported.
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    /// Benchmark name, e.g. `qft2` or `toffoli`.
    pub name: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::FitHeuristic(a) => commands::fit_heuristic(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Fixture(a) => commands::fixture(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
