use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;

use scbench_core::downsample::{
    amended_downsample, poisson_downsample, sample_efficiencies, DownsampleConfig,
    DownsampleMode, IpfStats, DEFAULT_EFFICIENCY_CV, DEFAULT_IPF_MAX_ITER, DEFAULT_IPF_TOL,
};
use scbench_core::matrix::{write_matrix, MatrixFormat};

use crate::commands::{read_matrix_auto, resolve_format};
use crate::provenance::{write_json, Record};

#[derive(Debug, Args, Serialize)]
pub struct DownsampleArgs {
    /// Reference ("true expression") matrix.
    #[arg(long)]
    pub reference: PathBuf,

    /// Input format (inferred from the extension when omitted).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<MatrixFormat>,

    /// basic: Gamma-distributed per-cell efficiencies, then Poisson.
    /// amended: match per-gene means and library sizes drawn from --original.
    #[arg(long)]
    pub mode: DownsampleMode,

    /// Mean sequencing efficiency in (0, 1); required in basic mode.
    #[arg(long, required_if_eq("mode", "basic"))]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,

    /// Coefficient of variation of the Gamma efficiency draw.
    #[arg(long, default_value_t = DEFAULT_EFFICIENCY_CV)]
    pub cv: f64,

    /// Random seed (mandatory; runs must be reproducible).
    #[arg(long)]
    pub seed: u64,

    /// Original dataset supplying marginal targets; required in amended mode.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub original: Option<PathBuf>,

    /// Relative marginal-error tolerance for the fitting loop.
    #[arg(long, default_value_t = DEFAULT_IPF_TOL)]
    pub tol: f64,

    /// Iteration cap for the fitting loop.
    #[arg(long, default_value_t = DEFAULT_IPF_MAX_ITER)]
    pub max_iter: usize,

    /// Output observed count matrix.
    #[arg(long)]
    pub output: PathBuf,

    /// Provenance JSON (mode, seed, efficiency, fitting statistics).
    #[arg(long)]
    pub provenance: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct DownsampleResults {
    pub mode: DownsampleMode,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_cv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ipf: Option<IpfStats>,
    pub clamp_events: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn run(args: &DownsampleArgs) -> anyhow::Result<()> {
    let reference = read_matrix_auto(&args.reference, args.format)?.to_real();
    let out_format = resolve_format(&args.output, None)?;
    let mut warnings = Vec::new();

    let (observed, results) = match args.mode {
        DownsampleMode::Basic => {
            let efficiency = args
                .efficiency
                .expect("clap enforces --efficiency in basic mode");
            let cfg = DownsampleConfig::basic(efficiency, args.cv, args.seed);
            cfg.validate()?;
            if let Some(w) = cfg.efficiency_tail_warning() {
                eprintln!("warning: {w}");
                warnings.push(w);
            }
            let (tau, clamp_events) = sample_efficiencies(reference.n_cells(), &cfg)?;
            let observed = poisson_downsample(&reference, &tau, cfg.seed)?;
            let results = DownsampleResults {
                mode: cfg.mode,
                seed: cfg.seed,
                mean_efficiency: Some(cfg.mean_efficiency),
                efficiency_cv: Some(cfg.efficiency_cv),
                ipf: None,
                clamp_events,
                warnings: warnings.clone(),
            };
            (observed, results)
        }
        DownsampleMode::Amended => {
            let Some(original_path) = &args.original else {
                bail!("--mode amended requires --original <original dataset>");
            };
            let original = read_matrix_auto(original_path, args.format)?
                .into_counts()
                .context("the original dataset must be an integer count matrix")?;
            let cfg = DownsampleConfig::amended(args.seed);
            let result = amended_downsample(&reference, &original, &cfg, args.tol, args.max_iter)?;
            if !result.scaled.converged {
                let w = format!(
                    "marginal matching did not converge in {} iterations \
                     (max relative error {:.3e}); output is usable but marginals are approximate",
                    result.scaled.iterations, result.scaled.max_marginal_error
                );
                eprintln!("warning: {w}");
                warnings.push(w);
            }
            let results = DownsampleResults {
                mode: cfg.mode,
                seed: cfg.seed,
                mean_efficiency: None,
                efficiency_cv: None,
                ipf: Some(result.scaled.ipf_stats()),
                clamp_events: 0,
                warnings: warnings.clone(),
            };
            (result.observed, results)
        }
    };

    write_matrix(&observed, &args.output, out_format)
        .with_context(|| format!("writing {}", args.output.display()))?;
    let record: Record<&DownsampleArgs, DownsampleResults> =
        Record::new("downsample", args, Some(results));
    write_json(&record, &args.provenance)?;
    Ok(())
}
