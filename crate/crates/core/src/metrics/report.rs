//! Report building blocks: correlation distribution summaries and the
//! paired per-gene summary-statistic comparison.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{MatrixValue, SparseMatrix};
use crate::metrics::pearson;

/// Median and quartiles of the defined entries of a correlation vector.
#[derive(Debug, Clone, Serialize)]
pub struct DistributionSummary {
    pub n_defined: usize,
    pub n_undefined: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

/// Summarize per-gene/per-cell correlations. Quartiles use linear
/// interpolation between order statistics.
pub fn summarize_correlations(values: &[Option<f64>]) -> DistributionSummary {
    let mut defined: Vec<f64> = values.iter().filter_map(|&v| v).collect();
    defined.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> Option<f64> {
        if defined.is_empty() {
            return None;
        }
        let pos = q * (defined.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        Some(defined[lo] + (defined[hi] - defined[lo]) * (pos - lo as f64))
    };
    DistributionSummary {
        n_defined: defined.len(),
        n_undefined: values.len() - defined.len(),
        median: quantile(0.5),
        q1: quantile(0.25),
        q3: quantile(0.75),
    }
}

/// Paired summary statistics for one gene present in both matrices.
#[derive(Debug, Clone, Serialize)]
pub struct GeneStatsRecord {
    pub gene_id: String,
    pub mean_original: f64,
    pub mean_other: f64,
    pub sd_original: f64,
    pub sd_other: f64,
    pub zero_fraction_original: f64,
    pub zero_fraction_other: f64,
}

/// Per-gene paired statistics plus the cross-gene correlation of each pair.
#[derive(Debug, Clone, Serialize)]
pub struct StatsComparison {
    pub records: Vec<GeneStatsRecord>,
    /// Pearson r between original and other per-gene means, across genes.
    pub mean_r: Option<f64>,
    pub sd_r: Option<f64>,
    pub zero_fraction_r: Option<f64>,
}

/// Compare per-gene mean, standard deviation, and zero fraction between two
/// matrices, matched by gene id.
///
/// With `matched_gene_ids = None`, the id intersection is used in the
/// original's order; an explicit list must exist in both matrices. Errors
/// when no genes match, naming the two id set sizes. Statistics are computed
/// on the matrices as given (normalize upstream if desired).
pub fn stats_comparison<A: MatrixValue, B: MatrixValue>(
    original: &SparseMatrix<A>,
    other: &SparseMatrix<B>,
    matched_gene_ids: Option<&[String]>,
) -> Result<StatsComparison> {
    let orig_index: HashMap<&str, usize> = original
        .gene_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let other_index: HashMap<&str, usize> = other
        .gene_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let matched: Vec<(usize, usize, String)> = match matched_gene_ids {
        Some(ids) => ids
            .iter()
            .map(|id| {
                let &g0 = orig_index.get(id.as_str()).ok_or_else(|| {
                    Error::Domain(format!("gene id {id:?} not present in the original matrix"))
                })?;
                let &g1 = other_index.get(id.as_str()).ok_or_else(|| {
                    Error::Domain(format!("gene id {id:?} not present in the other matrix"))
                })?;
                Ok((g0, g1, id.clone()))
            })
            .collect::<Result<_>>()?,
        None => original
            .gene_ids()
            .iter()
            .enumerate()
            .filter_map(|(g0, id)| {
                other_index
                    .get(id.as_str())
                    .map(|&g1| (g0, g1, id.clone()))
            })
            .collect(),
    };
    if matched.is_empty() {
        return Err(Error::Domain(format!(
            "no matched gene ids between matrices ({} vs {} ids)",
            original.n_genes(),
            other.n_genes()
        )));
    }

    let orig_stats = original.gene_summaries();
    let other_stats = other.gene_summaries();
    let records: Vec<GeneStatsRecord> = matched
        .iter()
        .map(|&(g0, g1, ref id)| GeneStatsRecord {
            gene_id: id.clone(),
            mean_original: orig_stats[g0].mean,
            mean_other: other_stats[g1].mean,
            sd_original: orig_stats[g0].sd,
            sd_other: other_stats[g1].sd,
            zero_fraction_original: orig_stats[g0].zero_fraction,
            zero_fraction_other: other_stats[g1].zero_fraction,
        })
        .collect();

    let paired_r = |f: fn(&GeneStatsRecord) -> (f64, f64)| -> Result<Option<f64>> {
        if records.len() < 2 {
            return Ok(None);
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = records.iter().map(f).unzip();
        pearson(&xs, &ys)
    };
    let mean_r = paired_r(|r| (r.mean_original, r.mean_other))?;
    let sd_r = paired_r(|r| (r.sd_original, r.sd_other))?;
    let zero_fraction_r = paired_r(|r| (r.zero_fraction_original, r.zero_fraction_other))?;

    Ok(StatsComparison {
        records,
        mean_r,
        sd_r,
        zero_fraction_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{default_ids, CountMatrix};

    fn toy() -> CountMatrix {
        CountMatrix::from_triplets(
            default_ids("G", 3),
            default_ids("C", 4),
            vec![
                (0, 0, 1),
                (0, 1, 3),
                (1, 0, 2),
                (1, 2, 2),
                (2, 3, 7),
            ],
        )
        .unwrap()
    }

    #[test]
    fn self_comparison_is_perfect() {
        let m = toy();
        let s = stats_comparison(&m, &m, None).unwrap();
        assert_eq!(s.records.len(), 3);
        assert_eq!(s.mean_r, Some(1.0));
        assert_eq!(s.sd_r, Some(1.0));
        assert_eq!(s.zero_fraction_r, Some(1.0));
    }

    #[test]
    fn single_matched_gene_has_undefined_correlations() {
        let m = toy();
        let ids = vec!["G2".to_string()];
        let s = stats_comparison(&m, &m, Some(&ids)).unwrap();
        assert_eq!(s.records.len(), 1);
        assert_eq!(s.mean_r, None);
    }

    #[test]
    fn disjoint_ids_error_names_sizes() {
        let a = toy();
        let b = CountMatrix::from_triplets(
            vec!["X1".into(), "X2".into()],
            default_ids("C", 2),
            vec![(0, 0, 1)],
        )
        .unwrap();
        let err = stats_comparison(&a, &b, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('3') && msg.contains('2'), "{msg}");
    }

    #[test]
    fn explicit_id_must_exist_in_both() {
        let m = toy();
        let ids = vec!["NOPE".to_string()];
        assert!(stats_comparison(&m, &m, Some(&ids)).is_err());
    }

    #[test]
    fn summary_quartiles() {
        let values: Vec<Option<f64>> =
            vec![Some(0.1), Some(0.2), Some(0.3), Some(0.4), None];
        let s = summarize_correlations(&values);
        assert_eq!(s.n_defined, 4);
        assert_eq!(s.n_undefined, 1);
        assert!((s.median.unwrap() - 0.25).abs() < 1e-12);
        assert!((s.q1.unwrap() - 0.175).abs() < 1e-12);
        assert!((s.q3.unwrap() - 0.325).abs() < 1e-12);

        let empty = summarize_correlations(&[None, None]);
        assert_eq!(empty.median, None);
        assert_eq!(empty.n_undefined, 2);
    }
}
