//! Baseline clustering: preprocessing, truncated PCA, and k-means or Ward
//! hierarchical clustering on the top principal components.

mod kmeans;
mod pca;
mod ward;

pub use kmeans::{kmeans, KmeansResult};
pub use pca::{pca, PcaResult};
pub use ward::{hclust_ward, Merge, WardResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{MatrixValue, Preprocess, SparseMatrix};
use crate::metrics::Partition;

/// Clustering algorithm applied to the PCA scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    Kmeans,
    /// Ward hierarchical clustering on the top principal components.
    HclustWardPc,
}

impl std::str::FromStr for ClusterMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kmeans" => Ok(ClusterMethod::Kmeans),
            "hclust-ward-pc" => Ok(ClusterMethod::HclustWardPc),
            other => Err(format!(
                "unknown clustering method {other:?} (expected kmeans or hclust-ward-pc)"
            )),
        }
    }
}

impl std::fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterMethod::Kmeans => write!(f, "kmeans"),
            ClusterMethod::HclustWardPc => write!(f, "hclust-ward-pc"),
        }
    }
}

/// Full specification of a clustering run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSpec {
    pub method: ClusterMethod,
    pub k: usize,
    pub n_pcs: usize,
    pub seed: u64,
    pub preprocess: Preprocess,
    /// Scale each gene to unit variance before PCA (off by default).
    pub scale_genes: bool,
}

impl Default for ClusteringSpec {
    fn default() -> Self {
        ClusteringSpec {
            method: ClusterMethod::Kmeans,
            k: 9,
            n_pcs: 10,
            seed: 0,
            preprocess: Preprocess::NORMALIZED_LOG,
            scale_genes: false,
        }
    }
}

impl ClusteringSpec {
    pub fn validate_for(&self, n_genes: usize, n_cells: usize) -> Result<()> {
        if self.k == 0 || self.k > n_cells {
            return Err(Error::Domain(format!(
                "k must be in 1..={n_cells} (number of cells), got {}",
                self.k
            )));
        }
        let max_pcs = n_genes.min(n_cells);
        if self.n_pcs == 0 || self.n_pcs > max_pcs {
            return Err(Error::Domain(format!(
                "n_pcs must be in 1..={max_pcs} for a {n_genes}x{n_cells} matrix, got {}",
                self.n_pcs
            )));
        }
        Ok(())
    }
}

/// Preprocess, project onto the top `n_pcs` components, and cluster.
pub fn cluster_pipeline<T: MatrixValue>(
    m: &SparseMatrix<T>,
    spec: &ClusteringSpec,
) -> Result<Partition> {
    Ok(cluster_pipeline_full(m, spec)?.0)
}

/// [`cluster_pipeline`] variant that also returns the PCA projection, for
/// callers that want to inspect or dump the scores.
pub fn cluster_pipeline_full<T: MatrixValue>(
    m: &SparseMatrix<T>,
    spec: &ClusteringSpec,
) -> Result<(Partition, PcaResult)> {
    spec.validate_for(m.n_genes(), m.n_cells())?;
    let projection = pca(m, spec.n_pcs, spec.preprocess, spec.scale_genes)?;
    let partition = match spec.method {
        ClusterMethod::Kmeans => kmeans(&projection.scores, spec.k, spec.seed)?.partition,
        ClusterMethod::HclustWardPc => hclust_ward(&projection.scores, spec.k)?.partition,
    };
    Ok((partition, projection))
}
