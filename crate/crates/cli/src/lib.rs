//! `scbench`: downsampling benchmark harness for single-cell expression
//! recovery methods.
//!
//! Subcommands: `build-ref`, `downsample`, `simulate`, `cluster`, `eval`,
//! `compare-stats`. Every stochastic subcommand requires an explicit
//! `--seed`; there is no wall-clock fallback, so any run can be reproduced
//! exactly from its provenance record. Outputs are deterministic for any
//! `--workers` setting.

pub mod commands;
pub mod labels;
pub mod manifest;
pub mod provenance;
pub mod svg;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "scbench",
    version,
    about = "Downsampling benchmark harness for single-cell expression recovery methods"
)]
pub struct Cli {
    /// Worker threads for internal parallelism (0 = rayon default).
    /// Outputs are identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter high-quality cells and highly expressed genes into a reference matrix.
    BuildRef(commands::build_ref::BuildRefArgs),
    /// Simulate a noisy observed matrix from a reference.
    Downsample(commands::downsample::DownsampleArgs),
    /// Generate a synthetic count matrix with planted cluster structure.
    Simulate(commands::simulate::SimulateArgs),
    /// Cluster cells: PCA followed by k-means or Ward hierarchical clustering.
    Cluster(commands::cluster::ClusterArgs),
    /// Evaluate recovery method outputs against a reference.
    Eval(commands::eval::EvalArgs),
    /// Compare per-gene summary statistics between two matrices.
    CompareStats(commands::compare_stats::CompareStatsArgs),
}

/// Run a parsed invocation, honoring `--workers`.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build()?;
        pool.install(|| dispatch(cli.command))
    } else {
        dispatch(cli.command)
    }
}

/// Parse and run from an explicit argument list (first item is the program
/// name). Used by integration tests to run the CLI in-process.
pub fn run_from<I, S>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run(Cli::try_parse_from(args)?)
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::BuildRef(args) => commands::build_ref::run(&args),
        Command::Downsample(args) => commands::downsample::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Cluster(args) => commands::cluster::run(&args),
        Command::Eval(args) => commands::eval::run(&args),
        Command::CompareStats(args) => commands::compare_stats::run(&args),
    }
}
