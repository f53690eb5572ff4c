use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use scbench_core::matrix::{MatrixFormat, Preprocess, RealMatrix};
use scbench_core::metrics::{stats_comparison, StatsComparison};

use crate::commands::read_matrix_auto;
use crate::provenance::{write_json, Record};
use crate::svg::{write_scatter_panels, Panel};

#[derive(Debug, Args, Serialize)]
pub struct CompareStatsArgs {
    /// Matrix whose statistics serve as the x axis (typically the original).
    #[arg(long)]
    pub original: PathBuf,

    /// Matrix to compare against it (typically the downsampled output).
    #[arg(long)]
    pub other: PathBuf,

    /// Input format for both matrices (inferred when omitted).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<MatrixFormat>,

    /// Per-gene paired statistics CSV.
    #[arg(long)]
    pub output_csv: PathBuf,

    /// Summary JSON with the three cross-gene correlations.
    #[arg(long)]
    pub summary: PathBuf,

    /// Optional SVG scatter panels (mean, sd, zero fraction).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,

    /// Compute statistics on normalized log1p values instead of raw counts.
    #[arg(long)]
    pub normalized: bool,
}

#[derive(Debug, Serialize)]
struct CompareStatsResults {
    n_matched_genes: usize,
    normalized: bool,
    mean_r: Option<f64>,
    sd_r: Option<f64>,
    zero_fraction_r: Option<f64>,
}

pub fn run(args: &CompareStatsArgs) -> anyhow::Result<()> {
    let original = read_matrix_auto(&args.original, args.format)?.to_real();
    let other = read_matrix_auto(&args.other, args.format)?.to_real();
    let (original, other): (RealMatrix, RealMatrix) = if args.normalized {
        (
            original.apply_preprocess(Preprocess::NORMALIZED_LOG),
            other.apply_preprocess(Preprocess::NORMALIZED_LOG),
        )
    } else {
        (original, other)
    };

    let comparison = stats_comparison(&original, &other, None)?;
    write_records_csv(&args.output_csv, &comparison)?;

    let results = CompareStatsResults {
        n_matched_genes: comparison.records.len(),
        normalized: args.normalized,
        mean_r: comparison.mean_r,
        sd_r: comparison.sd_r,
        zero_fraction_r: comparison.zero_fraction_r,
    };
    let record: Record<&CompareStatsArgs, CompareStatsResults> =
        Record::new("compare-stats", args, Some(results));
    write_json(&record, &args.summary)?;

    if let Some(svg_path) = &args.svg {
        // Mean and sd span orders of magnitude; plot on log1p axes.
        let log = |v: f64| v.ln_1p();
        let panels = [
            Panel {
                title: "Mean expression".into(),
                x_label: "log1p mean (original)".into(),
                y_label: "log1p mean (other)".into(),
                xs: comparison.records.iter().map(|r| log(r.mean_original)).collect(),
                ys: comparison.records.iter().map(|r| log(r.mean_other)).collect(),
            },
            Panel {
                title: "Standard deviation".into(),
                x_label: "log1p sd (original)".into(),
                y_label: "log1p sd (other)".into(),
                xs: comparison.records.iter().map(|r| log(r.sd_original)).collect(),
                ys: comparison.records.iter().map(|r| log(r.sd_other)).collect(),
            },
            Panel {
                title: "Zero fraction".into(),
                x_label: "zero fraction (original)".into(),
                y_label: "zero fraction (other)".into(),
                xs: comparison
                    .records
                    .iter()
                    .map(|r| r.zero_fraction_original)
                    .collect(),
                ys: comparison
                    .records
                    .iter()
                    .map(|r| r.zero_fraction_other)
                    .collect(),
            },
        ];
        write_scatter_panels(svg_path, &panels)?;
    }
    Ok(())
}

fn write_records_csv(path: &PathBuf, comparison: &StatsComparison) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "gene_id",
        "mean_original",
        "mean_other",
        "sd_original",
        "sd_other",
        "zero_fraction_original",
        "zero_fraction_other",
    ])?;
    for r in &comparison.records {
        w.write_record([
            r.gene_id.as_str(),
            &format!("{}", r.mean_original),
            &format!("{}", r.mean_other),
            &format!("{}", r.sd_original),
            &format!("{}", r.sd_other),
            &format!("{}", r.zero_fraction_original),
            &format!("{}", r.zero_fraction_other),
        ])?;
    }
    w.flush()?;
    Ok(())
}
