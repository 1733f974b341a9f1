use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Structured-sparsity regression: generate benchmarks, solve, compare
/// solvers and run the verification suite.
#[derive(Parser)]
#[command(name = "sprox", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Solve a problem read from disk and write result.json.
    Solve(SolveArgs),
    /// Run every (instance, method) pair of a benchmark config.
    Bench(BenchArgs),
    /// Run the verification suite.
    Check(CheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    OverlapChain,
    MultitaskBlocks,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Number of samples (default 100 for multitask-blocks; required for overlap-chain).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    num_groups: Option<usize>,
    #[arg(long, default_value_t = 100)]
    group_size: usize,
    #[arg(long, default_value_t = 10)]
    overlap: usize,
    #[arg(long)]
    j: Option<usize>,
    /// Comma-separated task block sizes.
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    #[arg(long)]
    effect_b: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long)]
    relevant_per_block: Option<usize>,
    #[arg(long)]
    cross_block: Option<usize>,
    /// Keep the edges with the largest |correlation| (default: min(5K, all pairs)).
    #[arg(long, conflicts_with = "rho")]
    target_edges: Option<usize>,
    /// Keep the edges with |correlation| above this threshold.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Spg,
    Fobos,
    Subgrad,
}

#[derive(Args)]
struct SolveArgs {
    /// Directory holding X.csv, y.csv or Y.csv, and groups.json or graph.json.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    x: Option<PathBuf>,
    /// Response: a single column (y) or one column per task (Y).
    #[arg(long)]
    y: Option<PathBuf>,
    /// Solve the multi-task problem even when the response has one column.
    #[arg(long)]
    multitask: bool,
    #[arg(long, conflicts_with = "graph")]
    groups: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, conflicts_with = "epsilon")]
    mu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = sprox::model::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = sprox::model::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Stop once the objective is at or below this value.
    #[arg(long)]
    target_objective: Option<f64>,
    #[arg(long)]
    precompute_gram: bool,
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "spg")]
    method: Method,
    /// Step scale c for fobos and subgrad.
    #[arg(long)]
    step_c: Option<f64>,
    #[arg(long, default_value = "result.json")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON benchmark configuration.
    config: PathBuf,
    #[arg(long, default_value = "table.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Run only checks whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Scale every smoothing solver's Lipschitz constant (negative control).
    #[arg(long, default_value_t = 1.0)]
    fuzz_lipschitz: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => commands::gen::run(&args).map(|()| ExitCode::SUCCESS),
        Command::Solve(args) => commands::solve::run(&args),
        Command::Bench(args) => commands::bench::run(&args),
        Command::Check(args) => commands::check::run(&args),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
