//! `cfa`: fit, certify and benchmark rank-constrained factor analysis models.

mod commands;
mod error;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::EXIT_OK;

#[derive(Parser, Debug)]
#[command(name = "cfa", version, about = "Rank-constrained factor analysis: solve, certify, bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit phi and theta with a conditional-gradient scheme.
    Solve(SolveArgs),
    /// Certify a q = 1 fit by branch and bound.
    Certify(CertifyArgs),
    /// Run CFA, PC and MTFA on generated instances; metrics as CSV.
    Bench(BenchArgs),
    /// Write one synthetic instance as CSV plus a JSON ground-truth sidecar.
    Datagen(DatagenArgs),
    /// Solve for each rank in a list; one CSV row per rank.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    /// Pick alg2 for q in {1, 2}, alg1 otherwise.
    Auto,
    /// Armijo scheme on the smooth objective.
    Alg1,
    /// Concave scheme with the G-sequence.
    Alg2,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Headerless CSV with p rows of p comma-separated numbers.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Ground-truth sidecar from `datagen`; adds the four error metrics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Auto)]
    pub algorithm: AlgorithmArg,
    /// Conditional-gradient tolerance.
    #[arg(long, default_value_t = cfa_core::model::DEFAULT_CG_TOL)]
    pub tol: f64,
    /// Inner ADMM tolerance as a multiple of --tol.
    #[arg(long, default_value_t = cfa_core::model::DEFAULT_ADMM_TOL_FACTOR)]
    pub admm_tol_factor: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Inner ADMM iteration cap.
    #[arg(long)]
    pub admm_max_iter: Option<usize>,
    /// Number of starts; extra starts are drawn from U[0, u].
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail (exit 4) when an inner ADMM solve hits its cap instead of continuing.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short)]
    pub rank: usize,
    /// JSON report path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-iteration trace as JSONL.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short)]
    pub rank: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Absolute gap at which the search stops.
    #[arg(long, default_value_t = 0.1)]
    pub bb_tol: f64,
    /// Split point shift: children meet at (1 - epsilon) phi_i + epsilon l_i.
    #[arg(long, default_value_t = 0.4)]
    pub epsilon: f64,
    /// Probability of a best-bound node pick.
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub node_cap: usize,
    /// Wall-clock cap in seconds.
    #[arg(long)]
    pub time_cap: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Skip root bound tightening.
    #[arg(long)]
    pub no_tighten: bool,
    /// Node events as JSONL.
    #[arg(long)]
    pub progress: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// A1, A2, B1, B2 or B3.
    #[arg(long)]
    pub class: String,
    #[arg(long)]
    pub p: usize,
    /// Generative rank (A1, B1, B2, B3).
    #[arg(long, default_value_t = 0)]
    pub big_r: usize,
    /// Structured block size (B2, B3).
    #[arg(long, default_value_t = 0)]
    pub r_inner: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Fitted rank; defaults to big_r - 1.
    #[arg(long, short)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DatagenArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Path prefix: writes PREFIX.csv and PREFIX.json.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Ranks, e.g. `1,2,5` or `1:10`.
    #[arg(long)]
    pub sweep_ranks: String,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CFA_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Certify(a) => commands::certify(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Datagen(a) => commands::datagen(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match res {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
