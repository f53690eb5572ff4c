//! Partition agreement: adjusted Rand index and pair-counting Jaccard.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A cluster assignment over cells. Labels are dense: `0..n_clusters`, with
/// every label used at least once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl Partition {
    /// Wrap dense labels; every id in `0..max+1` must occur.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("partition over zero cells".into()));
        }
        let n_clusters = labels.iter().max().unwrap() + 1;
        let mut used = vec![false; n_clusters];
        for &l in &labels {
            used[l] = true;
        }
        if let Some(missing) = used.iter().position(|&u| !u) {
            return Err(Error::Domain(format!(
                "cluster id {missing} unused; labels must be dense 0..{n_clusters}"
            )));
        }
        Ok(Partition { labels, n_clusters })
    }

    /// Densify arbitrary labels in first-occurrence order. ARI and Jaccard
    /// are invariant under relabeling, so this loses nothing.
    pub fn from_raw_labels<L: Hash + Eq>(raw: impl IntoIterator<Item = L>) -> Result<Self> {
        let mut ids: HashMap<L, usize> = HashMap::new();
        let mut labels = Vec::new();
        for item in raw {
            let next = ids.len();
            labels.push(*ids.entry(item).or_insert(next));
        }
        if labels.is_empty() {
            return Err(Error::Domain("partition over zero cells".into()));
        }
        let n_clusters = ids.len();
        Ok(Partition { labels, n_clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Relabel in first-occurrence order; two partitions induce the same
    /// grouping iff their canonical label vectors are equal.
    pub fn canonical(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.n_clusters];
        let mut next = 0;
        self.labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect()
    }
}

struct PairCounts {
    /// Sum over contingency cells of C(n_ij, 2): pairs co-clustered in both.
    together_both: i128,
    /// Sum over rows of C(a_i, 2): pairs co-clustered in `p`.
    together_p: i128,
    /// Sum over columns of C(b_j, 2): pairs co-clustered in `q`.
    together_q: i128,
    /// C(n, 2): all unordered pairs.
    total: i128,
}

fn choose2(x: usize) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

fn pair_counts(p: &Partition, q: &Partition) -> Result<PairCounts> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "partitions over {} and {} cells",
            p.len(),
            q.len()
        )));
    }
    if p.len() < 2 {
        return Err(Error::Domain(
            "partition comparison needs at least 2 cells".into(),
        ));
    }
    let mut contingency = vec![vec![0usize; q.n_clusters()]; p.n_clusters()];
    for (&a, &b) in p.labels().iter().zip(q.labels()) {
        contingency[a][b] += 1;
    }
    let together_both = contingency
        .iter()
        .flatten()
        .map(|&n| choose2(n))
        .sum();
    let together_p = contingency
        .iter()
        .map(|row| choose2(row.iter().sum()))
        .sum();
    let together_q = (0..q.n_clusters())
        .map(|j| choose2(contingency.iter().map(|row| row[j]).sum()))
        .sum();
    Ok(PairCounts {
        together_both,
        together_p,
        together_q,
        total: choose2(p.len()),
    })
}

/// Hubert-Arabie adjusted Rand index.
///
/// From the contingency table: `(S - E) / (M - E)` with
/// `E = A * B / T` and `M = (A + B) / 2`, where `S`, `A`, `B` are the
/// co-clustered pair counts and `T` the total pair count. Evaluated in
/// integer arithmetic as `(2TS - 2AB) / (T(A + B) - 2AB)` so hand cases are
/// exact. When `M == E` (both partitions trivial in the same way) the index
/// is 1 for identical partitions and 0 otherwise.
pub fn adjusted_rand_index(p: &Partition, q: &Partition) -> Result<f64> {
    let counts = pair_counts(p, q)?;
    let (s, a, b, t) = (
        counts.together_both,
        counts.together_p,
        counts.together_q,
        counts.total,
    );
    let numerator = 2 * t * s - 2 * a * b;
    let denominator = t * (a + b) - 2 * a * b;
    if denominator == 0 {
        return Ok(if p.canonical() == q.canonical() { 1.0 } else { 0.0 });
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Pair-counting Jaccard index: `n11 / (n11 + n10 + n01)` over unordered
/// cell pairs, where `n11` counts pairs co-clustered in both partitions and
/// `n10`/`n01` pairs co-clustered in exactly one. Returns 1 when both
/// partitions are all singletons (no co-clustered pairs anywhere).
pub fn jaccard_pairs(p: &Partition, q: &Partition) -> Result<f64> {
    let counts = pair_counts(p, q)?;
    let denominator = counts.together_p + counts.together_q - counts.together_both;
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(counts.together_both as f64 / denominator as f64)
}
