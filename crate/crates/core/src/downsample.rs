//! Downsampling: simulate noisy observed matrices from a reference.
//!
//! Basic mode draws a per-cell sequencing efficiency `tau_c` from a Gamma
//! distribution and samples every observed count `Y_gc` from
//! `Poisson(tau_c * lambda_gc)`, where `lambda` is the reference value.
//!
//! Amended mode instead rescales the reference so its per-gene means and
//! per-cell library sizes match targets drawn from an original dataset
//! (iterative proportional fitting), then Poisson-samples the rescaled
//! matrix with `tau = 1`: the realistic sequencing depth is already encoded
//! in the library-size targets, so no extra efficiency draw is applied.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CountMatrix, MatrixValue, RealMatrix, SparseMatrix};
use crate::refbuild::sample_poisson;
use crate::rng::{domain, substream};

/// Per-cell sequencing efficiencies, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyVector(Vec<f64>);

impl EfficiencyVector {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        for (c, &t) in tau.iter().enumerate() {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Domain(format!(
                    "efficiency for cell {c} is {t}, must be in (0, 1]"
                )));
            }
        }
        Ok(EfficiencyVector(tau))
    }

    /// Constant efficiency for every cell.
    pub fn uniform(n_cells: usize, tau: f64) -> Result<Self> {
        Self::new(vec![tau; n_cells])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Basic vs amended downsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DownsampleMode {
    Basic,
    Amended,
}

impl std::fmt::Display for DownsampleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DownsampleMode::Basic => write!(f, "basic"),
            DownsampleMode::Amended => write!(f, "amended"),
        }
    }
}

impl std::str::FromStr for DownsampleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "basic" => Ok(DownsampleMode::Basic),
            "amended" => Ok(DownsampleMode::Amended),
            other => Err(format!(
                "unknown downsample mode {other:?} (expected basic or amended)"
            )),
        }
    }
}

/// Downsampling parameters.
///
/// `mean_efficiency` and `efficiency_cv` parameterize the Gamma efficiency
/// draw in basic mode (shape `1/cv^2`, scale `mean * cv^2`); amended mode
/// ignores them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownsampleConfig {
    pub mean_efficiency: f64,
    pub efficiency_cv: f64,
    pub seed: u64,
    pub mode: DownsampleMode,
}

pub const DEFAULT_EFFICIENCY_CV: f64 = 0.3;
pub const DEFAULT_IPF_TOL: f64 = 1e-6;
pub const DEFAULT_IPF_MAX_ITER: usize = 200;

impl DownsampleConfig {
    pub fn basic(mean_efficiency: f64, efficiency_cv: f64, seed: u64) -> Self {
        DownsampleConfig {
            mean_efficiency,
            efficiency_cv,
            seed,
            mode: DownsampleMode::Basic,
        }
    }

    pub fn amended(seed: u64) -> Self {
        DownsampleConfig {
            mean_efficiency: 0.0,
            efficiency_cv: 0.0,
            seed,
            mode: DownsampleMode::Amended,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == DownsampleMode::Basic {
            if !(self.mean_efficiency > 0.0 && self.mean_efficiency < 1.0) {
                return Err(Error::Domain(format!(
                    "mean_efficiency must be in (0, 1), got {}",
                    self.mean_efficiency
                )));
            }
            if !(self.efficiency_cv > 0.0) {
                return Err(Error::Domain(format!(
                    "efficiency_cv must be positive, got {}",
                    self.efficiency_cv
                )));
            }
        }
        Ok(())
    }

    /// Warn when the Gamma distribution carries non-negligible mass above 1
    /// (five standard deviations above the mean crossing 1).
    pub fn efficiency_tail_warning(&self) -> Option<String> {
        let five_sigma = self.mean_efficiency * (1.0 + 5.0 * self.efficiency_cv);
        (self.mode == DownsampleMode::Basic && five_sigma > 1.0).then(|| {
            format!(
                "mean_efficiency {} with cv {} places Gamma mass above 1 \
                 (mean + 5 sd = {five_sigma:.4}); draws above 1 will be clamped",
                self.mean_efficiency, self.efficiency_cv
            )
        })
    }
}

/// Draw per-cell efficiencies from `Gamma(1/cv^2, mean * cv^2)`.
///
/// Draws above 1 are clamped to 1; the clamp count is returned so runs can
/// report it. Each cell uses its own substream, so the vector is identical
/// for any worker count.
pub fn sample_efficiencies(
    n_cells: usize,
    cfg: &DownsampleConfig,
) -> Result<(EfficiencyVector, usize)> {
    cfg.validate()?;
    if cfg.mode != DownsampleMode::Basic {
        return Err(Error::Domain(
            "sample_efficiencies applies to basic mode only".into(),
        ));
    }
    let shape = 1.0 / (cfg.efficiency_cv * cfg.efficiency_cv);
    let scale = cfg.mean_efficiency * cfg.efficiency_cv * cfg.efficiency_cv;
    let gamma = Gamma::new(shape, scale)
        .map_err(|e| Error::Domain(format!("invalid Gamma parameters: {e}")))?;

    let draws: Vec<f64> = (0..n_cells)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(cfg.seed, domain::EFFICIENCY, c as u64);
            gamma.sample(&mut rng)
        })
        .collect();
    let clamped = draws.iter().filter(|&&t| t > 1.0).count();
    let tau = draws
        .into_iter()
        .map(|t| t.clamp(f64::MIN_POSITIVE, 1.0))
        .collect();
    Ok((EfficiencyVector(tau), clamped))
}

/// Sample `Y_gc ~ Poisson(tau_c * lambda_gc)` independently per entry.
///
/// Entries with `lambda_gc = 0` are exactly zero. Deterministic for a given
/// seed regardless of worker count (one substream per cell).
pub fn poisson_downsample<T: MatrixValue>(
    reference: &SparseMatrix<T>,
    tau: &EfficiencyVector,
    seed: u64,
) -> Result<CountMatrix> {
    if tau.len() != reference.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{} efficiencies for {} cells",
            tau.len(),
            reference.n_cells()
        )));
    }
    let columns: Vec<Vec<(usize, u64)>> = (0..reference.n_cells())
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, domain::COUNTS, c as u64);
            let t = tau.as_slice()[c];
            let (genes, vals) = reference.col(c);
            let mut col = Vec::new();
            for (&g, &v) in genes.iter().zip(vals) {
                let y = sample_poisson(t * v.to_f64(), &mut rng);
                if y > 0 {
                    col.push((g, y));
                }
            }
            col
        })
        .collect();
    CountMatrix::from_columns(
        reference.gene_ids().to_vec(),
        reference.cell_ids().to_vec(),
        columns,
    )
}

/// Marginal targets for amended downsampling: per-gene means and per-cell
/// library sizes, consistent in total mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalTargets {
    pub gene_means: Vec<f64>,
    pub library_sizes: Vec<f64>,
    /// Global constant applied to the raw library sizes to reconcile the
    /// two mass totals (gene means are preserved exactly).
    pub rescale_factor: f64,
    /// Original gene indices the means were drawn from (ascending), when
    /// the targets came from [`draw_targets`]; empty for explicit targets.
    pub source_gene_indices: Vec<usize>,
    /// Original cell indices the library sizes were drawn from (ascending).
    pub source_cell_indices: Vec<usize>,
}

impl MarginalTargets {
    /// Validate and wrap explicit targets.
    pub fn new(gene_means: Vec<f64>, library_sizes: Vec<f64>) -> Result<Self> {
        let t = MarginalTargets {
            gene_means,
            library_sizes,
            rescale_factor: 1.0,
            source_gene_indices: Vec::new(),
            source_cell_indices: Vec::new(),
        };
        t.check_consistency()?;
        Ok(t)
    }

    fn check_consistency(&self) -> Result<()> {
        for (g, &m) in self.gene_means.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::Domain(format!("target mean for gene {g} is {m}")));
            }
        }
        for (c, &s) in self.library_sizes.iter().enumerate() {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Domain(format!(
                    "target library size for cell {c} is {s}"
                )));
            }
        }
        let gene_mass: f64 =
            self.gene_means.iter().sum::<f64>() * self.library_sizes.len() as f64;
        let cell_mass: f64 = self.library_sizes.iter().sum();
        let scale = gene_mass.abs().max(cell_mass.abs());
        if scale > 0.0 && (gene_mass - cell_mass).abs() > 1e-9 * scale {
            return Err(Error::Domain(format!(
                "inconsistent targets: gene-mean mass {gene_mass} vs library-size mass {cell_mass}"
            )));
        }
        Ok(())
    }
}

/// Draw marginal targets from an original dataset.
///
/// Samples `n_genes` genes and `n_cells` cells uniformly without
/// replacement. Gene targets are the sampled genes' means over all original
/// cells; cell targets are the sampled cells' library sizes over all
/// original genes. Because the two index sets slice the original
/// differently, their masses need not agree, so library sizes are rescaled
/// by one global constant; the per-gene mean distribution is kept exact.
pub fn draw_targets(
    original: &CountMatrix,
    n_genes: usize,
    n_cells: usize,
    seed: u64,
) -> Result<MarginalTargets> {
    if n_genes == 0 || n_genes > original.n_genes() {
        return Err(Error::Domain(format!(
            "requested {n_genes} genes from an original with {}",
            original.n_genes()
        )));
    }
    if n_cells == 0 || n_cells > original.n_cells() {
        return Err(Error::Domain(format!(
            "requested {n_cells} cells from an original with {}",
            original.n_cells()
        )));
    }

    let mut gene_rng = substream(seed, domain::TARGET_GENES, 0);
    let mut gene_idx: Vec<usize> =
        rand::seq::index::sample(&mut gene_rng, original.n_genes(), n_genes).into_vec();
    gene_idx.sort_unstable();
    let mut cell_rng = substream(seed, domain::TARGET_CELLS, 0);
    let mut cell_idx: Vec<usize> =
        rand::seq::index::sample(&mut cell_rng, original.n_cells(), n_cells).into_vec();
    cell_idx.sort_unstable();

    let summaries = original.gene_summaries();
    let gene_means: Vec<f64> = gene_idx.iter().map(|&g| summaries[g].mean).collect();
    let sizes = original.library_sizes();
    let raw_sizes: Vec<f64> = cell_idx.iter().map(|&c| sizes[c]).collect();

    let gene_mass: f64 = gene_means.iter().sum::<f64>() * n_cells as f64;
    let raw_mass: f64 = raw_sizes.iter().sum();
    let rescale_factor = if raw_mass > 0.0 {
        gene_mass / raw_mass
    } else if gene_mass == 0.0 {
        0.0
    } else {
        return Err(Error::Domain(
            "sampled cells have zero total counts; cannot match nonzero gene-mean mass".into(),
        ));
    };
    let library_sizes = raw_sizes.iter().map(|&s| s * rescale_factor).collect();

    let targets = MarginalTargets {
        gene_means,
        library_sizes,
        rescale_factor,
        source_gene_indices: gene_idx,
        source_cell_indices: cell_idx,
    };
    targets.check_consistency()?;
    Ok(targets)
}

/// Result of iterative proportional fitting: per-gene and per-cell factors
/// such that the scaled value at `(g, c)` is `row_factors[g] *
/// col_factors[c] * lambda_gc`.
#[derive(Debug, Clone)]
pub struct ScaledReference {
    pub row_factors: Vec<f64>,
    pub col_factors: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest relative marginal error at the final iteration.
    pub max_marginal_error: f64,
    /// Max relative marginal error after each iteration; non-increasing on
    /// feasible problems.
    pub error_history: Vec<f64>,
    base: RealMatrix,
}

impl ScaledReference {
    pub fn base(&self) -> &RealMatrix {
        &self.base
    }

    /// Materialize the scaled matrix `alpha_g * beta_c * lambda_gc`.
    pub fn to_matrix(&self) -> RealMatrix {
        let triplets: Vec<(usize, usize, f64)> = self
            .base
            .iter()
            .map(|(g, c, v)| (g, c, self.row_factors[g] * self.col_factors[c] * v))
            .collect();
        RealMatrix::from_triplets(
            self.base.gene_ids().to_vec(),
            self.base.cell_ids().to_vec(),
            triplets,
        )
        .expect("scaling preserves validity")
    }

    /// Summary for provenance records.
    pub fn ipf_stats(&self) -> IpfStats {
        IpfStats {
            iterations: self.iterations,
            converged: self.converged,
            max_marginal_error: self.max_marginal_error,
        }
    }
}

/// Convergence statistics emitted in provenance records.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IpfStats {
    pub iterations: usize,
    pub converged: bool,
    pub max_marginal_error: f64,
}

/// Iterative proportional fitting of the reference to marginal targets.
///
/// Alternately sets `alpha_g = target_row_sum_g / current_row_sum_g` and
/// `beta_c = target_col_sum_c / current_col_sum_c` until the largest
/// relative marginal error is at most `tol` or `max_iter` is reached.
/// Rows/columns with a zero target get factor 0. Non-convergence is not an
/// error: the result carries `converged = false` and the achieved errors,
/// and structurally unreachable targets (a nonzero target on an all-zero
/// row or column) surface as residual error.
pub fn match_marginals<T: MatrixValue>(
    reference: &SparseMatrix<T>,
    targets: &MarginalTargets,
    tol: f64,
    max_iter: usize,
) -> Result<ScaledReference> {
    if targets.gene_means.len() != reference.n_genes()
        || targets.library_sizes.len() != reference.n_cells()
    {
        return Err(Error::DimensionMismatch(format!(
            "targets are {}x{} but reference is {}x{}",
            targets.gene_means.len(),
            targets.library_sizes.len(),
            reference.n_genes(),
            reference.n_cells()
        )));
    }
    targets.check_consistency()?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Domain(format!(
            "tol must be positive and max_iter nonzero (got {tol}, {max_iter})"
        )));
    }

    let base = reference.to_real();
    let n_cells = base.n_cells() as f64;
    let row_targets: Vec<f64> = targets.gene_means.iter().map(|&m| m * n_cells).collect();
    let col_targets = &targets.library_sizes;

    let mut alpha = vec![1.0; base.n_genes()];
    let mut beta = vec![1.0; base.n_cells()];
    let mut error_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;

        // alpha step: row sums under current beta.
        let mut row_sums = vec![0.0; base.n_genes()];
        for (g, c, v) in base.iter() {
            row_sums[g] += beta[c] * v;
        }
        for g in 0..base.n_genes() {
            alpha[g] = if row_sums[g] > 0.0 {
                row_targets[g] / row_sums[g]
            } else {
                0.0
            };
        }

        // beta step: column sums under the new alpha.
        for c in 0..base.n_cells() {
            let (genes, vals) = base.col(c);
            let col_sum: f64 = genes.iter().zip(vals).map(|(&g, &v)| alpha[g] * v).sum();
            beta[c] = if col_sum > 0.0 {
                col_targets[c] / col_sum
            } else {
                0.0
            };
        }

        // Achieved marginals under (alpha, beta).
        let mut achieved_rows = vec![0.0; base.n_genes()];
        let mut achieved_cols = vec![0.0; base.n_cells()];
        for (g, c, v) in base.iter() {
            let scaled = alpha[g] * beta[c] * v;
            achieved_rows[g] += scaled;
            achieved_cols[c] += scaled;
        }
        let mut max_err = 0.0_f64;
        for g in 0..base.n_genes() {
            max_err = max_err.max(relative_error(achieved_rows[g], row_targets[g]));
        }
        for c in 0..base.n_cells() {
            max_err = max_err.max(relative_error(achieved_cols[c], col_targets[c]));
        }
        error_history.push(max_err);
        if max_err <= tol {
            converged = true;
            break;
        }
    }

    let max_marginal_error = *error_history.last().expect("at least one iteration");
    Ok(ScaledReference {
        row_factors: alpha,
        col_factors: beta,
        converged,
        iterations,
        max_marginal_error,
        error_history,
        base,
    })
}

fn relative_error(achieved: f64, target: f64) -> f64 {
    if target > 0.0 {
        (achieved - target).abs() / target
    } else if achieved != 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Everything an amended downsampling run produces.
#[derive(Debug, Clone)]
pub struct AmendedResult {
    pub observed: CountMatrix,
    pub scaled: ScaledReference,
    pub targets: MarginalTargets,
}

/// Amended downsampling: match the reference to marginal targets drawn from
/// the original dataset, then Poisson-sample the scaled matrix with
/// `tau = 1` (sequencing depth is already encoded in the targets).
///
/// Row `g` of the output carries the statistics of the original gene the
/// `g`-th target was drawn from, so the output's gene ids are relabeled to
/// those sampled original genes; per-gene comparisons against the original
/// then pair correctly by id. Cell ids stay the reference's (each column is
/// a reference cell re-observed at a matched sequencing depth).
pub fn amended_downsample<T: MatrixValue>(
    reference: &SparseMatrix<T>,
    original: &CountMatrix,
    cfg: &DownsampleConfig,
    tol: f64,
    max_iter: usize,
) -> Result<AmendedResult> {
    if cfg.mode != DownsampleMode::Amended {
        return Err(Error::Domain(
            "amended_downsample requires mode = amended".into(),
        ));
    }
    let targets = draw_targets(original, reference.n_genes(), reference.n_cells(), cfg.seed)?;
    let scaled = match_marginals(reference, &targets, tol, max_iter)?;
    let scaled_matrix = scaled.to_matrix();
    let tau = EfficiencyVector::uniform(reference.n_cells(), 1.0)?;
    let sampled_gene_ids: Vec<String> = targets
        .source_gene_indices
        .iter()
        .map(|&g| original.gene_ids()[g].clone())
        .collect();
    let observed =
        poisson_downsample(&scaled_matrix, &tau, cfg.seed)?.with_gene_ids(sampled_gene_ids)?;
    Ok(AmendedResult {
        observed,
        scaled,
        targets,
    })
}
