//! Evaluate recovery method outputs against a reference.
//!
//! The raw observed matrix is always scored alongside the listed methods as
//! the baseline method `observed`, so every report carries the comparison
//! anchor. A method whose file cannot be read or whose shape disagrees with
//! the reference is recorded as failed while the others proceed; the run
//! fails only if every method does.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;

use scbench_core::matrix::{Preprocess, RealMatrix};
use scbench_core::metrics::{
    adjusted_rand_index, cmd, correlation_matrix, jaccard_pairs, matrix_correlations,
    summarize_correlations, Axis, AxisCorrelations, CorrelationMatrix, DistributionSummary,
    Partition,
};

use crate::commands::read_matrix_auto;
use crate::labels::read_labels_csv;
use crate::manifest::EvaluationManifest;
use crate::provenance::{write_json, Record};

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Evaluation manifest JSON.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Directory for the consolidated report and per-method CSVs.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct MethodReport {
    method: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gene_correlation: Option<DistributionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cell_correlation: Option<DistributionSummary>,
    cmd_gene: Option<f64>,
    cmd_cell: Option<f64>,
    ari: Option<f64>,
    jaccard: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

impl MethodReport {
    fn failed(method: String, error: String) -> Self {
        MethodReport {
            method,
            status: "error",
            error: Some(error),
            gene_correlation: None,
            cell_correlation: None,
            cmd_gene: None,
            cmd_cell: None,
            ari: None,
            jaccard: None,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
struct EvalResults {
    reference: PathBuf,
    preprocess: Preprocess,
    methods: Vec<MethodReport>,
}

struct ReferenceContext {
    matrix: RealMatrix,
    corr_gene: CorrelationMatrix,
    corr_cell: CorrelationMatrix,
    labels: Option<Partition>,
    preprocess: Preprocess,
}

pub fn run(args: &EvalArgs) -> anyhow::Result<()> {
    let manifest = EvaluationManifest::load(&args.manifest)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let reference = read_matrix_auto(&manifest.reference, None)?.to_real();
    let corr_gene = correlation_matrix(&reference, Axis::Gene, manifest.preprocess)
        .context("reference gene-gene correlation matrix")?;
    let corr_cell = correlation_matrix(&reference, Axis::Cell, manifest.preprocess)
        .context("reference cell-cell correlation matrix")?;
    let labels = manifest
        .reference_labels
        .as_ref()
        .map(|p| read_labels_csv(p, reference.cell_ids()))
        .transpose()?;
    let ctx = ReferenceContext {
        matrix: reference,
        corr_gene,
        corr_cell,
        labels,
        preprocess: manifest.preprocess,
    };

    let mut entries: Vec<(String, PathBuf, Option<PathBuf>)> = vec![(
        "observed".to_string(),
        manifest.observed.clone(),
        manifest.observed_labels.clone(),
    )];
    for m in &manifest.methods {
        entries.push((m.name.clone(), m.path.clone(), m.labels.clone()));
    }

    let mut reports = Vec::new();
    for (name, path, label_path) in entries {
        let report = match evaluate_method(&ctx, &name, &path, label_path.as_deref(), &args.out_dir)
        {
            Ok(report) => report,
            Err(err) => {
                eprintln!("warning: method {name}: {err:#}");
                MethodReport::failed(name, format!("{err:#}"))
            }
        };
        reports.push(report);
    }

    if reports.iter().all(|r| r.status == "error") {
        bail!("every method failed evaluation");
    }

    let results = EvalResults {
        reference: manifest.reference.clone(),
        preprocess: manifest.preprocess,
        methods: reports,
    };
    let record: Record<&EvalArgs, EvalResults> = Record::new("eval", args, Some(results));
    write_json(&record, &args.out_dir.join("evaluation.json"))?;
    Ok(())
}

fn evaluate_method(
    ctx: &ReferenceContext,
    name: &str,
    path: &Path,
    label_path: Option<&Path>,
    out_dir: &Path,
) -> anyhow::Result<MethodReport> {
    let matrix = read_matrix_auto(path, None)?.to_real();
    if matrix.n_genes() != ctx.matrix.n_genes() || matrix.n_cells() != ctx.matrix.n_cells() {
        bail!(
            "matrix is {}x{} but the reference is {}x{}",
            matrix.n_genes(),
            matrix.n_cells(),
            ctx.matrix.n_genes(),
            ctx.matrix.n_cells()
        );
    }

    let mut notes = Vec::new();
    let gene = matrix_correlations(&matrix, &ctx.matrix, Axis::Gene, ctx.preprocess)?;
    let cell = matrix_correlations(&matrix, &ctx.matrix, Axis::Cell, ctx.preprocess)?;
    write_correlation_csv(
        &out_dir.join(format!("{name}.gene_correlations.csv")),
        "gene_id",
        ctx.matrix.gene_ids(),
        &gene,
    )?;
    write_correlation_csv(
        &out_dir.join(format!("{name}.cell_correlations.csv")),
        "cell_id",
        ctx.matrix.cell_ids(),
        &cell,
    )?;

    let cmd_gene = match correlation_matrix(&matrix, Axis::Gene, ctx.preprocess)
        .and_then(|r| cmd(&r, &ctx.corr_gene))
    {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("gene correlation-matrix distance unavailable: {e}"));
            None
        }
    };
    let cmd_cell = match correlation_matrix(&matrix, Axis::Cell, ctx.preprocess)
        .and_then(|r| cmd(&r, &ctx.corr_cell))
    {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("cell correlation-matrix distance unavailable: {e}"));
            None
        }
    };

    let (mut ari, mut jaccard) = (None, None);
    if let (Some(ref_labels), Some(lp)) = (&ctx.labels, label_path) {
        let method_labels = read_labels_csv(lp, ctx.matrix.cell_ids())?;
        ari = Some(adjusted_rand_index(&method_labels, ref_labels)?);
        jaccard = Some(jaccard_pairs(&method_labels, ref_labels)?);
    }

    Ok(MethodReport {
        method: name.to_string(),
        status: "ok",
        error: None,
        gene_correlation: Some(summarize_correlations(&gene.values)),
        cell_correlation: Some(summarize_correlations(&cell.values)),
        cmd_gene,
        cmd_cell,
        ari,
        jaccard,
        notes,
    })
}

fn write_correlation_csv(
    path: &Path,
    id_column: &str,
    ids: &[String],
    correlations: &AxisCorrelations,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record([id_column, "r"])?;
    for (id, value) in ids.iter().zip(&correlations.values) {
        let formatted = value.map(|v| format!("{v}")).unwrap_or_default();
        w.write_record([id.as_str(), formatted.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
