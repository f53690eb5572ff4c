use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use scbench_core::cluster::{cluster_pipeline_full, ClusterMethod, ClusteringSpec};
use scbench_core::matrix::{MatrixFormat, Preprocess};

use crate::commands::read_matrix_auto;
use crate::labels::write_labels_csv;
use crate::provenance::{write_json, Record};

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    /// Input matrix (counts or reals).
    #[arg(long)]
    pub input: PathBuf,

    /// Input format (inferred from the extension when omitted).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<MatrixFormat>,

    /// kmeans or hclust-ward-pc.
    #[arg(long, default_value = "kmeans")]
    pub method: ClusterMethod,

    /// Number of clusters.
    #[arg(long, default_value_t = 9)]
    pub k: usize,

    /// Number of principal components to cluster on.
    #[arg(long, default_value_t = 10)]
    pub n_pcs: usize,

    /// Random seed (mandatory; k-means initialization depends on it).
    #[arg(long)]
    pub seed: u64,

    /// Skip median-library-size normalization.
    #[arg(long)]
    pub no_normalize: bool,

    /// Skip the log1p transform.
    #[arg(long)]
    pub no_log: bool,

    /// Scale each gene to unit variance before PCA.
    #[arg(long)]
    pub scale_genes: bool,

    /// Output labels CSV (cell_id,cluster).
    #[arg(long)]
    pub output: PathBuf,

    /// Provenance JSON.
    #[arg(long)]
    pub provenance: PathBuf,

    /// Optionally dump the PCA scores (cells × components) as CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores_csv: Option<PathBuf>,
}

pub fn run(args: &ClusterArgs) -> anyhow::Result<()> {
    let matrix = read_matrix_auto(&args.input, args.format)?.to_real();
    let spec = ClusteringSpec {
        method: args.method,
        k: args.k,
        n_pcs: args.n_pcs,
        seed: args.seed,
        preprocess: Preprocess {
            normalize: !args.no_normalize,
            log1p: !args.no_log,
        },
        scale_genes: args.scale_genes,
    };
    let (partition, projection) = cluster_pipeline_full(&matrix, &spec)?;

    write_labels_csv(&args.output, matrix.cell_ids(), &partition)?;
    if let Some(path) = &args.scores_csv {
        write_scores_csv(path, matrix.cell_ids(), &projection.scores)?;
    }
    let record: Record<&ClusterArgs, ClusteringSpec> =
        Record::new("cluster", args, Some(spec));
    write_json(&record, &args.provenance)?;
    Ok(())
}

fn write_scores_csv(
    path: &PathBuf,
    cell_ids: &[String],
    scores: &nalgebra::DMatrix<f64>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["cell_id".to_string()];
    header.extend((1..=scores.ncols()).map(|j| format!("PC{j}")));
    w.write_record(&header)?;
    for (i, id) in cell_ids.iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend((0..scores.ncols()).map(|j| format!("{}", scores[(i, j)])));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
