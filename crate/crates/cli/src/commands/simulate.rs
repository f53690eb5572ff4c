use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use scbench_core::refbuild::{simulate_synthetic, SyntheticConfig};

use crate::commands::resolve_format;
use crate::labels::write_labels_csv;
use crate::provenance::{write_json, Record};

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub genes: usize,

    #[arg(long, default_value_t = 300)]
    pub cells: usize,

    #[arg(long, default_value_t = 3)]
    pub clusters: usize,

    /// Expression multiplier of each cluster's marker genes.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,

    /// Median of the log-normal base expression profile.
    #[arg(long, default_value_t = 2.0)]
    pub base_mean: f64,

    /// Random seed (mandatory; runs must be reproducible).
    #[arg(long)]
    pub seed: u64,

    /// Output count matrix.
    #[arg(long)]
    pub output: PathBuf,

    /// True cluster labels CSV (cell_id,cluster).
    #[arg(long)]
    pub labels: PathBuf,

    /// Provenance JSON (config echo).
    #[arg(long)]
    pub provenance: PathBuf,
}

pub fn run(args: &SimulateArgs) -> anyhow::Result<()> {
    let cfg = SyntheticConfig {
        n_genes: args.genes,
        n_cells: args.cells,
        n_clusters: args.clusters,
        cluster_separation: args.separation,
        base_mean: args.base_mean,
        seed: args.seed,
    };
    let (matrix, truth) = simulate_synthetic(&cfg)?;

    let out_format = resolve_format(&args.output, None)?;
    scbench_core::matrix::write_matrix(&matrix, &args.output, out_format)
        .with_context(|| format!("writing {}", args.output.display()))?;
    write_labels_csv(&args.labels, matrix.cell_ids(), &truth)?;
    let record: Record<&SimulateArgs, SyntheticConfig> =
        Record::new("simulate", args, Some(cfg));
    write_json(&record, &args.provenance)?;
    Ok(())
}
