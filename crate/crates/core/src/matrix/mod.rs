//! Sparse genes × cells matrices and their summary statistics.
//!
//! Matrices are stored in compressed sparse column form (one column per
//! cell) because downsampling, library sizes, and normalization all operate
//! per cell. Rows are genes. Absent entries are zero; explicit zeros are
//! dropped at construction, so the stored entry set is exactly the nonzero
//! set. Matrices are immutable after construction and safe to share across
//! threads.

mod io;

pub use io::{read_matrix, write_matrix, AnyMatrix, MatrixFormat};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar types a matrix can hold: UMI counts (`u64`) or reals (`f64`).
pub trait MatrixValue:
    Copy + PartialEq + PartialOrd + std::fmt::Debug + Send + Sync + 'static
{
    /// MatrixMarket `field` keyword for this value type.
    const MM_FIELD: &'static str;

    fn to_f64(self) -> f64;
    fn is_zero(self) -> bool;
    /// Validate a freshly parsed/constructed value (nonnegative, finite).
    fn check(self) -> std::result::Result<(), String>;
    /// Serialize for file output; must parse back to an equal value.
    fn format(self) -> String;
}

impl MatrixValue for u64 {
    const MM_FIELD: &'static str = "integer";

    fn to_f64(self) -> f64 {
        self as f64
    }
    fn is_zero(self) -> bool {
        self == 0
    }
    fn check(self) -> std::result::Result<(), String> {
        Ok(())
    }
    fn format(self) -> String {
        self.to_string()
    }
}

impl MatrixValue for f64 {
    const MM_FIELD: &'static str = "real";

    fn to_f64(self) -> f64 {
        self
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn check(self) -> std::result::Result<(), String> {
        if !self.is_finite() {
            Err(format!("non-finite value {self}"))
        } else if self < 0.0 {
            Err(format!("negative value {self}"))
        } else {
            Ok(())
        }
    }
    fn format(self) -> String {
        // `{:e}` prints the shortest decimal that round-trips exactly.
        format!("{self:e}")
    }
}

/// Sparse genes × cells matrix in CSC layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    gene_ids: Vec<String>,
    cell_ids: Vec<String>,
    /// Column start offsets, length `n_cells + 1`.
    col_ptr: Vec<usize>,
    /// Gene index of each stored entry, sorted within each column.
    row_idx: Vec<usize>,
    values: Vec<T>,
}

/// Integer UMI count matrix (houses observed and original data).
pub type CountMatrix = SparseMatrix<u64>;
/// Nonnegative real matrix (scaled references, normalized data, imputed output).
pub type RealMatrix = SparseMatrix<f64>;

/// Per-gene summary statistics over all cells (zeros included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneSummary {
    pub mean: f64,
    /// Population standard deviation (divide by `n_cells`).
    pub sd: f64,
    /// Fraction of cells in which the gene has a zero count.
    pub zero_fraction: f64,
}

/// Generate default identifiers `"<prefix>1" ..= "<prefix>n"`.
pub fn default_ids(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_ids(kind: &str, ids: &[String]) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::Domain(format!(
            "matrix must have at least one {kind}"
        )));
    }
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Domain(format!("duplicate {kind} id {id:?}")));
        }
    }
    Ok(())
}

impl<T: MatrixValue> SparseMatrix<T> {
    /// Build a matrix from `(gene, cell, value)` triplets.
    ///
    /// Zero values are dropped; negative or non-finite values and duplicate
    /// coordinates are rejected. Ids must be unique and nonempty.
    pub fn from_triplets(
        gene_ids: Vec<String>,
        cell_ids: Vec<String>,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        check_ids("gene", &gene_ids)?;
        check_ids("cell", &cell_ids)?;
        let (n_genes, n_cells) = (gene_ids.len(), cell_ids.len());

        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        for (g, c, v) in triplets {
            if g >= n_genes || c >= n_cells {
                return Err(Error::Domain(format!(
                    "entry ({g}, {c}) out of range for {n_genes}x{n_cells} matrix"
                )));
            }
            v.check().map_err(|msg| {
                Error::Domain(format!("entry ({g}, {c}): {msg}"))
            })?;
            if !v.is_zero() {
                entries.push((g, c, v));
            }
        }
        entries.sort_unstable_by_key(|&(g, c, _)| (c, g));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Domain(format!(
                    "duplicate coordinate ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }

        let mut col_ptr = vec![0usize; n_cells + 1];
        for &(_, c, _) in &entries {
            col_ptr[c + 1] += 1;
        }
        for c in 0..n_cells {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx = entries.iter().map(|&(g, _, _)| g).collect();
        let values = entries.iter().map(|&(_, _, v)| v).collect();
        Ok(SparseMatrix {
            gene_ids,
            cell_ids,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// All-zero matrix with the given identifiers.
    pub fn zeros(gene_ids: Vec<String>, cell_ids: Vec<String>) -> Result<Self> {
        Self::from_triplets(gene_ids, cell_ids, std::iter::empty())
    }

    /// Build from per-cell column data: `columns[c]` lists `(gene, value)`
    /// pairs. Used by samplers that generate one column per cell.
    pub(crate) fn from_columns(
        gene_ids: Vec<String>,
        cell_ids: Vec<String>,
        columns: Vec<Vec<(usize, T)>>,
    ) -> Result<Self> {
        check_ids("gene", &gene_ids)?;
        check_ids("cell", &cell_ids)?;
        if columns.len() != cell_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns for {} cells",
                columns.len(),
                cell_ids.len()
            )));
        }
        let mut col_ptr = Vec::with_capacity(cell_ids.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in &columns {
            debug_assert!(col.windows(2).all(|w| w[0].0 < w[1].0));
            for &(g, v) in col {
                debug_assert!(g < gene_ids.len() && !v.is_zero());
                row_idx.push(g);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SparseMatrix {
            gene_ids,
            cell_ids,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_ids.len()
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn cell_ids(&self) -> &[String] {
        &self.cell_ids
    }

    /// Stored entries of column `c` as parallel (gene indices, values) slices.
    pub fn col(&self, c: usize) -> (&[usize], &[T]) {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Iterate stored entries in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_cells()).flat_map(move |c| {
            let (genes, vals) = self.col(c);
            genes.iter().zip(vals).map(move |(&g, &v)| (g, c, v))
        })
    }

    /// Value at `(g, c)`, zero if absent.
    pub fn value_at(&self, g: usize, c: usize) -> f64 {
        let (genes, vals) = self.col(c);
        match genes.binary_search(&g) {
            Ok(pos) => vals[pos].to_f64(),
            Err(_) => 0.0,
        }
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.values.iter().map(|v| v.to_f64()).sum()
    }

    /// Per-cell library sizes (column sums). Exact for integer input.
    pub fn library_sizes(&self) -> Vec<f64> {
        (0..self.n_cells())
            .map(|c| self.col(c).1.iter().map(|v| v.to_f64()).sum())
            .collect()
    }

    /// Per-gene row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_genes()];
        for (g, _, v) in self.iter() {
            sums[g] += v.to_f64();
        }
        sums
    }

    /// Per-gene mean, population standard deviation, and zero fraction.
    pub fn gene_summaries(&self) -> Vec<GeneSummary> {
        let n = self.n_cells() as f64;
        let mut sum = vec![0.0; self.n_genes()];
        let mut sum_sq = vec![0.0; self.n_genes()];
        let mut nonzeros = vec![0usize; self.n_genes()];
        for (g, _, v) in self.iter() {
            let x = v.to_f64();
            sum[g] += x;
            sum_sq[g] += x * x;
            nonzeros[g] += 1;
        }
        (0..self.n_genes())
            .map(|g| {
                let mean = sum[g] / n;
                let var = (sum_sq[g] / n - mean * mean).max(0.0);
                GeneSummary {
                    mean,
                    sd: var.sqrt(),
                    zero_fraction: (self.n_cells() - nonzeros[g]) as f64 / n,
                }
            })
            .collect()
    }

    /// Restrict to the given gene and cell indices, in the given order.
    ///
    /// Indices must be in range and duplicate-free. Entry values and ids are
    /// carried over; `subset` with identity index lists returns an equal
    /// matrix.
    pub fn subset(&self, gene_indices: &[usize], cell_indices: &[usize]) -> Result<Self> {
        let mut gene_pos = vec![usize::MAX; self.n_genes()];
        for (new, &old) in gene_indices.iter().enumerate() {
            if old >= self.n_genes() {
                return Err(Error::Domain(format!(
                    "gene index {old} out of range ({} genes)",
                    self.n_genes()
                )));
            }
            if gene_pos[old] != usize::MAX {
                return Err(Error::Domain(format!("duplicate gene index {old}")));
            }
            gene_pos[old] = new;
        }
        let mut seen_cells = vec![false; self.n_cells()];
        for &old in cell_indices {
            if old >= self.n_cells() {
                return Err(Error::Domain(format!(
                    "cell index {old} out of range ({} cells)",
                    self.n_cells()
                )));
            }
            if seen_cells[old] {
                return Err(Error::Domain(format!("duplicate cell index {old}")));
            }
            seen_cells[old] = true;
        }

        let gene_ids = gene_indices
            .iter()
            .map(|&g| self.gene_ids[g].clone())
            .collect();
        let cell_ids = cell_indices
            .iter()
            .map(|&c| self.cell_ids[c].clone())
            .collect();
        let mut columns = Vec::with_capacity(cell_indices.len());
        for &old_c in cell_indices {
            let (genes, vals) = self.col(old_c);
            let mut col: Vec<(usize, T)> = genes
                .iter()
                .zip(vals)
                .filter_map(|(&g, &v)| {
                    (gene_pos[g] != usize::MAX).then_some((gene_pos[g], v))
                })
                .collect();
            col.sort_unstable_by_key(|&(g, _)| g);
            columns.push(col);
        }
        Self::from_columns(gene_ids, cell_ids, columns)
    }

    /// Replace the gene identifiers, keeping everything else.
    pub fn with_gene_ids(mut self, gene_ids: Vec<String>) -> Result<Self> {
        if gene_ids.len() != self.n_genes() {
            return Err(Error::DimensionMismatch(format!(
                "{} ids for {} genes",
                gene_ids.len(),
                self.n_genes()
            )));
        }
        check_ids("gene", &gene_ids)?;
        self.gene_ids = gene_ids;
        Ok(self)
    }

    /// Convert to a real-valued matrix with identical structure.
    pub fn to_real(&self) -> RealMatrix {
        RealMatrix {
            gene_ids: self.gene_ids.clone(),
            cell_ids: self.cell_ids.clone(),
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.values.iter().map(|v| v.to_f64()).collect(),
        }
    }

    /// Library-size normalization and optional log transform.
    ///
    /// Each column is scaled by `median library size / column library size`,
    /// with the median taken over cells with nonzero library size.
    /// Zero-library columns stay all-zero. With `do_log`, every value `v`
    /// becomes `ln(1 + v)`.
    pub fn normalize_and_log(&self, do_log: bool) -> RealMatrix {
        self.apply_preprocess(Preprocess {
            normalize: true,
            log1p: do_log,
        })
    }

    /// Apply a [`Preprocess`] flag set, producing a real matrix.
    pub fn apply_preprocess(&self, flags: Preprocess) -> RealMatrix {
        let mut out = self.to_real();
        if flags.normalize {
            let sizes = out.library_sizes();
            let mut positive: Vec<f64> = sizes.iter().copied().filter(|&s| s > 0.0).collect();
            if !positive.is_empty() {
                positive.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                let median = median_of_sorted(&positive);
                for c in 0..out.n_cells() {
                    if sizes[c] > 0.0 {
                        let factor = median / sizes[c];
                        for i in out.col_ptr[c]..out.col_ptr[c + 1] {
                            out.values[i] *= factor;
                        }
                    }
                }
            }
        }
        if flags.log1p {
            for v in &mut out.values {
                *v = v.ln_1p();
            }
        }
        out
    }

    /// Dense gene-major representation (each inner vec has length `n_cells`).
    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_cells()]; self.n_genes()];
        for (g, c, v) in self.iter() {
            rows[g][c] = v.to_f64();
        }
        rows
    }

    /// Dense cell-major representation (each inner vec has length `n_genes`).
    pub fn to_dense_cols(&self) -> Vec<Vec<f64>> {
        let mut cols = vec![vec![0.0; self.n_genes()]; self.n_cells()];
        for (g, c, v) in self.iter() {
            cols[c][g] = v.to_f64();
        }
        cols
    }
}

impl CountMatrix {
    /// Convert to reals and reinterpret; see [`SparseMatrix::to_real`].
    pub fn as_real(&self) -> RealMatrix {
        self.to_real()
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Which preprocessing steps to apply before correlation or clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocess {
    /// Median-library-size scaling per cell.
    pub normalize: bool,
    /// Natural-log `ln(1 + v)` transform.
    pub log1p: bool,
}

impl Preprocess {
    /// No preprocessing; raw values.
    pub const RAW: Preprocess = Preprocess {
        normalize: false,
        log1p: false,
    };
    /// Library-size normalization followed by `log1p`.
    pub const NORMALIZED_LOG: Preprocess = Preprocess {
        normalize: true,
        log1p: true,
    };
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess::NORMALIZED_LOG
    }
}
