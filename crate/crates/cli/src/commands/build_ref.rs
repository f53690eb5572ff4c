use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use scbench_core::matrix::{write_matrix, MatrixFormat};
use scbench_core::refbuild::{build_reference, FilterReport, ReferenceFilterConfig};

use crate::commands::{read_matrix_auto, resolve_format};
use crate::provenance::{write_json, Record};

#[derive(Debug, Args, Serialize)]
pub struct BuildRefArgs {
    /// Input count matrix.
    #[arg(long)]
    pub input: PathBuf,

    /// Input format (inferred from the extension when omitted).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<MatrixFormat>,

    /// Output reference matrix.
    #[arg(long)]
    pub output: PathBuf,

    /// JSON filter report (kept/dropped counts and thresholds).
    #[arg(long)]
    pub report: PathBuf,

    /// Keep cells with library size at or above this value.
    #[arg(long, default_value_t = 1000)]
    pub min_library_size: u64,

    /// Keep genes with mean expression (over kept cells) at or above this value.
    #[arg(long, default_value_t = 0.5)]
    pub min_gene_mean: f64,

    /// Keep genes expressed in at least this fraction of kept cells.
    #[arg(long, default_value_t = 0.25)]
    pub min_nonzero_frac: f64,
}

pub fn run(args: &BuildRefArgs) -> anyhow::Result<()> {
    let counts = read_matrix_auto(&args.input, args.format)?
        .into_counts()
        .context("reference building needs an integer count matrix")?;
    let cfg = ReferenceFilterConfig {
        min_cell_library_size: args.min_library_size,
        min_gene_mean: args.min_gene_mean,
        min_gene_nonzero_fraction: args.min_nonzero_frac,
    };
    let (reference, report) = build_reference(&counts, &cfg)?;

    let out_format = resolve_format(&args.output, None)?;
    write_matrix(&reference, &args.output, out_format)
        .with_context(|| format!("writing {}", args.output.display()))?;
    let record: Record<&BuildRefArgs, FilterReport> =
        Record::new("build-ref", args, Some(report));
    write_json(&record, &args.report)?;
    Ok(())
}
