//! Truncated PCA by randomized SVD.
//!
//! Cells are points, genes are features: the preprocessed matrix is
//! transposed to cells × genes, each gene is centered (and optionally
//! scaled to unit variance), and the top components are found with the
//! Halko-Martinsson-Tropp randomized range finder plus power iterations.
//! The Gaussian test matrix comes from a fixed internal substream, so the
//! decomposition is a deterministic function of its inputs.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{MatrixValue, Preprocess, SparseMatrix};
use crate::rng::{domain, substream};

/// Scores, loadings, and explained variance of a truncated PCA.
#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Cells × k projection of the centered data onto the loadings.
    pub scores: DMatrix<f64>,
    /// Genes × k orthonormal component loadings.
    pub loadings: DMatrix<f64>,
    /// Population variance of each score column, non-increasing.
    pub explained_variance: Vec<f64>,
}

const OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 2;
/// Internal seed for the Gaussian test matrix; fixed so `pca` is pure.
const RANGE_FINDER_SEED: u64 = 0x05ee_d9ca;

/// Top-`k` principal components of `m` with cells as observations.
///
/// The sign of each component is fixed by making its largest-magnitude
/// loading entry positive. Errors if `k` exceeds `min(n_genes, n_cells)` or
/// the matrix is constant after preprocessing.
pub fn pca<T: MatrixValue>(
    m: &SparseMatrix<T>,
    k: usize,
    preprocess: Preprocess,
    scale_genes: bool,
) -> Result<PcaResult> {
    let max_k = m.n_genes().min(m.n_cells());
    if k == 0 || k > max_k {
        return Err(Error::Domain(format!(
            "k must be in 1..={max_k} for a {}x{} matrix, got {k}",
            m.n_genes(),
            m.n_cells()
        )));
    }

    let real = m.apply_preprocess(preprocess);
    let (n, p) = (m.n_cells(), m.n_genes());
    // Cells x genes, gene-centered.
    let mut data = DMatrix::zeros(n, p);
    for (g, c, v) in real.iter() {
        data[(c, g)] = v;
    }
    for j in 0..p {
        let mean = data.column(j).sum() / n as f64;
        for i in 0..n {
            data[(i, j)] -= mean;
        }
    }
    if scale_genes {
        for j in 0..p {
            let var = data.column(j).iter().map(|x| x * x).sum::<f64>() / n as f64;
            if var > 0.0 {
                let sd = var.sqrt();
                for i in 0..n {
                    data[(i, j)] /= sd;
                }
            }
        }
    }
    if data.iter().all(|&x| x == 0.0) {
        return Err(Error::Domain(
            "matrix is constant after preprocessing; no principal components exist".into(),
        ));
    }

    let l = (k + OVERSAMPLE).min(max_k);
    let mut rng = substream(RANGE_FINDER_SEED, domain::PCA, 0);
    let omega = DMatrix::from_fn(p, l, |_, _| StandardNormal.sample(&mut rng));

    let mut q = (&data * &omega).qr().q();
    for _ in 0..POWER_ITERATIONS {
        let z = (data.transpose() * &q).qr().q();
        q = (&data * &z).qr().q();
    }
    let small = q.transpose() * &data; // l x p
    let svd = small.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");

    let mut loadings = DMatrix::zeros(p, k);
    for j in 0..k {
        for g in 0..p {
            loadings[(g, j)] = v_t[(j, g)];
        }
    }
    // Sign convention: largest-magnitude loading entry positive.
    for j in 0..k {
        let mut best = 0;
        for g in 1..p {
            if loadings[(g, j)].abs() > loadings[(best, j)].abs() {
                best = g;
            }
        }
        if loadings[(best, j)] < 0.0 {
            for g in 0..p {
                loadings[(g, j)] = -loadings[(g, j)];
            }
        }
    }

    let scores = &data * &loadings;
    let mut explained_variance: Vec<f64> = (0..k)
        .map(|j| scores.column(j).iter().map(|x| x * x).sum::<f64>() / n as f64)
        .collect();

    // Components arrive in singular-value order; enforce non-increasing
    // explained variance exactly (near-ties can swap under rounding).
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        explained_variance[b]
            .partial_cmp(&explained_variance[a])
            .unwrap()
    });
    let reordered = order != (0..k).collect::<Vec<_>>();
    let (scores, loadings) = if reordered {
        let scores = DMatrix::from_fn(n, k, |i, j| scores[(i, order[j])]);
        let loadings = DMatrix::from_fn(p, k, |g, j| loadings[(g, order[j])]);
        explained_variance = order.iter().map(|&j| explained_variance[j]).collect();
        (scores, loadings)
    } else {
        (scores, loadings)
    };

    Ok(PcaResult {
        scores,
        loadings,
        explained_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{default_ids, RealMatrix};

    fn from_dense(rows: &[Vec<f64>]) -> RealMatrix {
        let n_genes = rows.len();
        let n_cells = rows[0].len();
        let mut triplets = Vec::new();
        for (g, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                triplets.push((g, c, v));
            }
        }
        RealMatrix::from_triplets(default_ids("G", n_genes), default_ids("C", n_cells), triplets)
            .unwrap()
    }

    #[test]
    fn rank_one_data_concentrates_variance() {
        // Cells on a line in two gene dimensions.
        let m = from_dense(&[
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 4.0, 6.0, 8.0],
        ]);
        let r = pca(&m, 2, Preprocess::RAW, false).unwrap();
        assert!(r.explained_variance[0] > 0.0);
        assert!(r.explained_variance[1].abs() < 1e-20 * r.explained_variance[0].max(1.0));
    }

    #[test]
    fn duplicate_cells_have_identical_scores() {
        let m = from_dense(&[
            vec![1.0, 5.0, 1.0, 2.0],
            vec![3.0, 0.0, 3.0, 1.0],
            vec![2.0, 2.0, 2.0, 9.0],
        ]);
        let r = pca(&m, 2, Preprocess::RAW, false).unwrap();
        for j in 0..2 {
            assert_eq!(r.scores[(0, j)], r.scores[(2, j)]);
        }
    }

    #[test]
    fn scores_are_centered_with_matching_variance() {
        let m = from_dense(&[
            vec![1.0, 4.0, 0.5, 3.0, 2.0],
            vec![0.0, 2.0, 5.0, 1.0, 3.0],
            vec![2.5, 1.0, 2.0, 0.0, 4.0],
        ]);
        let r = pca(&m, 3, Preprocess::RAW, false).unwrap();
        let n = 5.0;
        for j in 0..3 {
            let mean = r.scores.column(j).sum() / n;
            assert!(mean.abs() < 1e-8, "component {j} mean {mean}");
            let var = r.scores.column(j).iter().map(|x| x * x).sum::<f64>() / n;
            assert!((var - r.explained_variance[j]).abs() <= 1e-6 * var.max(1e-12));
        }
        for w in r.explained_variance.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn loadings_are_orthonormal() {
        let m = from_dense(&[
            vec![1.0, 4.0, 0.5, 3.0],
            vec![0.0, 2.0, 5.0, 1.0],
            vec![2.5, 1.0, 2.0, 0.0],
        ]);
        let r = pca(&m, 3, Preprocess::RAW, false).unwrap();
        let gram = r.loadings.transpose() * &r.loadings;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expected).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn constant_matrix_is_rejected() {
        let m = from_dense(&[vec![2.0, 2.0, 2.0], vec![5.0, 5.0, 5.0]]);
        assert!(pca(&m, 1, Preprocess::RAW, false).is_err());
    }

    #[test]
    fn k_bounds_enforced() {
        let m = from_dense(&[vec![1.0, 2.0], vec![3.0, 1.0]]);
        assert!(pca(&m, 3, Preprocess::RAW, false).is_err());
        assert!(pca(&m, 0, Preprocess::RAW, false).is_err());
    }
}
