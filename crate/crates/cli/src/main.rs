//! `nndc` — experiment runner for nearest-neighbor search difficulty.
//!
//! Every command emits a self-describing CSV: a header row plus one comment
//! line carrying a hash of the resolved configuration, so identical configs
//! produce byte-identical artifacts.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
const EXIT_CONFIG: i32 = 2;
const EXIT_DATA: i32 = 3;
const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "nndc",
    about = "Quantify nearest-neighbor search difficulty and benchmark hashing against it",
    long_about = "Relative contrast measures how separable a query's nearest neighbor is from \
                  the rest of a database. These commands measure it, predict it from data \
                  statistics, sweep it across data properties, and benchmark LSH / PCA / MRC \
                  hashing against brute-force ground truth. All output is CSV."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it to a file.
    Gen(commands::GenArgs),
    /// Empirical and predicted contrast for a dataset.
    Contrast(commands::ContrastArgs),
    /// Predicted contrast over a sigma' x n grid (no data involved).
    PredictSweep(commands::PredictSweepArgs),
    /// Empirical vs predicted contrast as dimensionality grows.
    DimSweep(commands::DimSweepArgs),
    /// Empirical vs predicted contrast as sparsity varies.
    SparsitySweep(commands::SparsitySweepArgs),
    /// Empirical vs predicted contrast as database size grows.
    NSweep(commands::NSweepArgs),
    /// Empirical vs predicted contrast across distance norms.
    PSweep(commands::PSweepArgs),
    /// Intrinsic dimensionality by the contrast-sweep method.
    IntrinsicDim(commands::IntrinsicDimArgs),
    /// LSH recall against table count or hamming budget.
    LshEval(commands::LshEvalArgs),
    /// PCA vs MRC vs random-projection codes under hamming ranking.
    HashCompare(commands::HashCompareArgs),
}

/// Flags shared by every command.
#[derive(Debug, Args)]
struct CommonArgs {
    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key=value config file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

fn main() {
    // NNDC_THREADS caps worker parallelism.
    if let Ok(v) = std::env::var("NNDC_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            _ => {
                eprintln!("error: NNDC_THREADS must be a positive integer, got {v:?}");
                std::process::exit(EXIT_CONFIG);
            }
        }
    }

    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand_config_args(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    };
    let cli = Cli::parse_from(argv);

    let result = match cli.command {
        Command::Gen(a) => commands::run_gen(a),
        Command::Contrast(a) => commands::run_contrast(a),
        Command::PredictSweep(a) => commands::run_predict_sweep(a),
        Command::DimSweep(a) => commands::run_dim_sweep(a),
        Command::SparsitySweep(a) => commands::run_sparsity_sweep(a),
        Command::NSweep(a) => commands::run_n_sweep(a),
        Command::PSweep(a) => commands::run_p_sweep(a),
        Command::IntrinsicDim(a) => commands::run_intrinsic_dim(a),
        Command::LshEval(a) => commands::run_lsh_eval(a),
        Command::HashCompare(a) => commands::run_hash_compare(a),
    };

    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code_for(&e));
    }
}

fn exit_code_for(e: &anyhow::Error) -> i32 {
    use nndc::Error;
    match e.downcast_ref::<Error>() {
        Some(Error::Io(_))
        | Some(Error::MalformedBinary { .. })
        | Some(Error::MalformedText { .. })
        | Some(Error::UnknownFormat(_))
        | Some(Error::QueryCollision { .. })
        | Some(Error::DimensionMismatch { .. }) => EXIT_DATA,
        Some(Error::NoConvergence { .. }) | Some(Error::Numeric(_)) | Some(Error::Degenerate(_)) => {
            EXIT_NUMERIC
        }
        Some(_) => EXIT_CONFIG,
        None => {
            if e.downcast_ref::<std::io::Error>().is_some() {
                EXIT_DATA
            } else {
                EXIT_CONFIG
            }
        }
    }
}
