//! `odpca` benchmark CLI.
//!
//! Exit codes: 0 on success, 1 on argument errors, 2 on runtime errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "odpca", version, about = "Online distributed PCA benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthetic run with ground-truth errors plus a sample-size scaling table.
    Synth(CommonArgs),
    /// Relative rank-K reconstruction error of each estimator.
    Lowrank(CommonArgs),
    /// Relative k-means cost on data projected by each estimator.
    Kmeans(CommonArgs),
    /// Phase timings across a sweep of projection surpluses Z.
    Bench(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Ambient dimension of the synthetic spiked model.
    #[arg(long = "d")]
    pub d: Option<usize>,
    /// Target rank K.
    #[arg(long = "K", default_value_t = 5)]
    pub k: usize,
    /// Projection surplus Z; `bench` accepts a comma-separated sweep.
    #[arg(long = "Z", value_delimiter = ',', default_value = "0")]
    pub z: Vec<usize>,
    /// Number of nodes m.
    #[arg(long = "m", default_value_t = 4)]
    pub m: usize,
    /// Samples per node per round n.
    #[arg(long = "n", default_value_t = 100)]
    pub n: usize,
    /// Number of rounds T.
    #[arg(long = "T", default_value_t = 5)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the synthetic model's eigenbasis.
    #[arg(long, default_value_t = 0)]
    pub model_seed: u64,
    /// Replications (synth, kmeans) or timing repetitions (bench).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Input dataset; without it a synthetic model of dimension --d is used.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// none, global or per_batch.
    #[arg(long, default_value = "none")]
    pub center: String,
    /// CSV input has a header line.
    #[arg(long)]
    pub header: bool,
    /// Shuffle dataset rows with this seed before streaming.
    #[arg(long)]
    pub shuffle: Option<u64>,
    #[arg(long)]
    pub limit_rows: Option<usize>,
    /// Refuse densified inputs larger than this many GiB.
    #[arg(long, default_value_t = 8.0)]
    pub memory_cap_gb: f64,
    /// Report CSV path; the JSON summary goes next to it with a .json extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of odpca,dpca,full,baseline.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "odpca,dpca,full,baseline"
    )]
    pub algorithms: Vec<String>,
    /// Number of k-means clusters (defaults to K).
    #[arg(long = "k")]
    pub clusters: Option<usize>,
    /// Planted-cluster separation for synthetic k-means data.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    /// Use sign-scrambled latent draws instead of Gaussian ones.
    #[arg(long)]
    pub sign_scrambled: bool,
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
        Command::Synth(args) => commands::synth(&args),
        Command::Lowrank(args) => commands::lowrank(&args),
        Command::Kmeans(args) => commands::kmeans(&args),
        Command::Bench(args) => commands::bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
