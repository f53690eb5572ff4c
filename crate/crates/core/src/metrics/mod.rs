//! Evaluation metrics: correlation with a reference, correlation-matrix
//! distance, clustering agreement, and paired summary-statistic comparison.
//!
//! Vectors that are constant have no defined Pearson correlation; every
//! operation here returns an explicit `None` for such entries and reports a
//! skip count instead of silently dropping them or substituting zero, since
//! silent policies corrupt aggregate distributions.

mod agreement;
mod report;

pub use agreement::{adjusted_rand_index, jaccard_pairs, Partition};
pub use report::{
    stats_comparison, summarize_correlations, DistributionSummary, GeneStatsRecord,
    StatsComparison,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{MatrixValue, Preprocess, SparseMatrix};

/// Which direction of the matrix a per-vector metric runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Gene,
    Cell,
}

/// Pearson product-moment correlation.
///
/// Returns `None` when either vector is constant (undefined correlation).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Domain(format!(
            "correlation needs at least 2 observations, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Coefficient of determination of regressing `x` on `y` by ordinary least
/// squares with intercept: `1 - SS_res / SS_tot`.
///
/// Implemented via the explicit regression (slope, intercept, residuals)
/// rather than through [`pearson`], so the algebraic identity
/// `r_squared == pearson^2` can serve as a cross-check between two routes.
/// Returns `None` when `y` is constant; a constant `x` yields 0.
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Domain(format!(
            "regression needs at least 2 observations, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mx = x.iter().sum::<f64>() / n;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if syy == 0.0 {
        return Ok(None);
    }
    let slope = sxy / syy;
    let intercept = mx - slope * my;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let predicted = slope * b + intercept;
        ss_res += (a - predicted) * (a - predicted);
        ss_tot += (a - mx) * (a - mx);
    }
    if ss_tot == 0.0 {
        // x constant: the regression explains nothing.
        return Ok(Some(0.0));
    }
    Ok(Some(1.0 - ss_res / ss_tot))
}

/// Per-gene or per-cell correlations between two equally shaped matrices.
#[derive(Debug, Clone, Serialize)]
pub struct AxisCorrelations {
    pub axis: Axis,
    /// One entry per gene (or cell); `None` where either vector is constant.
    pub values: Vec<Option<f64>>,
    pub n_defined: usize,
    pub n_undefined: usize,
}

/// Pearson correlation between `a` and `b` per gene row or per cell column,
/// after applying `preprocess` to both matrices.
///
/// Undefined entries (constant vectors) are counted, not dropped.
pub fn matrix_correlations<A: MatrixValue, B: MatrixValue>(
    a: &SparseMatrix<A>,
    b: &SparseMatrix<B>,
    axis: Axis,
    preprocess: Preprocess,
) -> Result<AxisCorrelations> {
    if a.n_genes() != b.n_genes() || a.n_cells() != b.n_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.n_genes(),
            a.n_cells(),
            b.n_genes(),
            b.n_cells()
        )));
    }
    let pa = a.apply_preprocess(preprocess);
    let pb = b.apply_preprocess(preprocess);
    let (va, vb) = match axis {
        Axis::Gene => (pa.to_dense_rows(), pb.to_dense_rows()),
        Axis::Cell => (pa.to_dense_cols(), pb.to_dense_cols()),
    };
    let values: Vec<Option<f64>> = va
        .iter()
        .zip(&vb)
        .map(|(x, y)| pearson(x, y))
        .collect::<Result<_>>()?;
    let n_defined = values.iter().filter(|v| v.is_some()).count();
    Ok(AxisCorrelations {
        axis,
        n_undefined: values.len() - n_defined,
        n_defined,
        values,
    })
}

/// Symmetric matrix of pairwise Pearson correlations with a validity mask
/// for constant vectors.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    n: usize,
    /// Row-major `n * n` values; entries touching an invalid index are NaN.
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.valid[i]).collect()
    }
}

/// Pairwise correlations among genes (rows) or cells (columns) after
/// preprocessing. Constant vectors are masked invalid rather than dropped.
pub fn correlation_matrix<T: MatrixValue>(
    m: &SparseMatrix<T>,
    axis: Axis,
    preprocess: Preprocess,
) -> Result<CorrelationMatrix> {
    let p = m.apply_preprocess(preprocess);
    let vectors = match axis {
        Axis::Gene => p.to_dense_rows(),
        Axis::Cell => p.to_dense_cols(),
    };
    let n = vectors.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "correlation matrix needs at least 2 vectors on the {axis:?} axis, got {n}"
        )));
    }

    // Center and unit-normalize once; correlations become dot products.
    let normalized: Vec<Option<Vec<f64>>> = vectors
        .into_iter()
        .map(|mut v| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let mut ss = 0.0;
            for x in &mut v {
                *x -= mean;
                ss += *x * *x;
            }
            if ss == 0.0 {
                return None;
            }
            let norm = ss.sqrt();
            for x in &mut v {
                *x /= norm;
            }
            Some(v)
        })
        .collect();
    let valid: Vec<bool> = normalized.iter().map(Option::is_some).collect();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![f64::NAN; n];
            if let Some(vi) = &normalized[i] {
                row[i] = 1.0;
                for j in 0..n {
                    if j != i {
                        if let Some(vj) = &normalized[j] {
                            let dot: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
                            row[j] = dot.clamp(-1.0, 1.0);
                        }
                    }
                }
            }
            row
        })
        .collect();
    let values = rows.into_iter().flatten().collect();
    Ok(CorrelationMatrix { n, values, valid })
}

/// Correlation matrix distance `1 - trace(R1 R2) / (||R1||_F ||R2||_F)`,
/// computed on the common valid submatrix. Zero iff the two correlation
/// structures coincide up to scale; bounded by 1 for valid correlation
/// matrices.
pub fn cmd(r1: &CorrelationMatrix, r2: &CorrelationMatrix) -> Result<f64> {
    if r1.n != r2.n {
        return Err(Error::DimensionMismatch(format!(
            "correlation matrices of size {} and {}",
            r1.n, r2.n
        )));
    }
    let common: Vec<usize> = (0..r1.n)
        .filter(|&i| r1.valid[i] && r2.valid[i])
        .collect();
    if common.len() < 2 {
        return Err(Error::Domain(format!(
            "common valid set has {} indices, need at least 2",
            common.len()
        )));
    }
    let mut inner = 0.0;
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    for &i in &common {
        for &j in &common {
            let a = r1.get(i, j);
            let b = r2.get(i, j);
            inner += a * b;
            f1 += a * a;
            f2 += b * b;
        }
    }
    let denom = (f1.sqrt()) * (f2.sqrt());
    let value = 1.0 - inner / denom;
    // Guard against rounding pushing the Cauchy-Schwarz bound past zero.
    Ok(if value < 0.0 && value > -1e-9 { 0.0 } else { value })
}
