//! Agglomerative hierarchical clustering with Ward linkage.
//!
//! Distances are maintained with the Lance-Williams recurrence on squared
//! Euclidean point distances, which keeps every active pair's value at
//! twice the Ward merge cost `|A||B|/(|A|+|B|) * ||mu_A - mu_B||^2`. Ties
//! break on the smallest cluster-id pair, so the merge sequence is fully
//! deterministic.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::Partition;

/// One agglomeration step: clusters `a` and `b` merged at `height` into a
/// cluster of `size` points. New clusters take ids `n`, `n+1`, ... in merge
/// order, after the singleton ids `0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    /// Ward merge cost; non-decreasing along the sequence.
    pub height: f64,
    pub size: usize,
}

/// Merge sequence plus the k-cluster cut.
#[derive(Debug, Clone)]
pub struct WardResult {
    pub partition: Partition,
    pub merges: Vec<Merge>,
}

/// Cluster the rows of `points` into exactly `k` groups by Ward linkage.
pub fn hclust_ward(points: &DMatrix<f64>, k: usize) -> Result<WardResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "k must be in 1..={n} for {n} points, got {k}"
        )));
    }

    // Active clusters: stable ids, member lists, sizes, pairwise distances.
    let mut ids: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut dist: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..points.ncols() {
                let d = points[(i, c)] - points[(j, c)];
                s += d * d;
            }
            dist[i][j] = s;
            dist[j][i] = s;
        }
    }

    let mut merges = Vec::with_capacity(n - k);
    let mut next_id = n;
    let mut last_height = f64::NEG_INFINITY;
    while ids.len() > k {
        // Find the minimum-distance active pair; scan order makes the
        // smallest (id_a, id_b) pair win ties.
        let m = ids.len();
        let (mut bi, mut bj) = (0, 1);
        let mut best = f64::INFINITY;
        for i in 0..m {
            for j in (i + 1)..m {
                if dist[i][j] < best {
                    best = dist[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }

        let height = best / 2.0;
        debug_assert!(height >= last_height - 1e-9 * height.abs().max(1.0));
        last_height = last_height.max(height);
        let (size_a, size_b) = (sizes[bi], sizes[bj]);
        let merged_size = size_a + size_b;
        merges.push(Merge {
            a: ids[bi].min(ids[bj]),
            b: ids[bi].max(ids[bj]),
            height,
            size: merged_size,
        });

        // Lance-Williams Ward update of every other cluster's distance to
        // the merged cluster, written into slot bi.
        for x in 0..m {
            if x == bi || x == bj {
                continue;
            }
            let size_x = sizes[x];
            let updated = ((size_a + size_x) as f64 * dist[x][bi]
                + (size_b + size_x) as f64 * dist[x][bj]
                - size_x as f64 * best)
                / (size_a + size_b + size_x) as f64;
            dist[x][bi] = updated;
            dist[bi][x] = updated;
        }

        // Merge bj into bi, then drop slot bj.
        ids[bi] = next_id;
        next_id += 1;
        sizes[bi] = merged_size;
        let moved = members[bj].clone();
        members[bi].extend(moved);
        ids.swap_remove(bj);
        sizes.swap_remove(bj);
        members.swap_remove(bj);
        dist.swap_remove(bj);
        for row in &mut dist {
            row.swap_remove(bj);
        }
    }

    // Label clusters by their smallest original member for determinism.
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by_key(|&i| members[i].iter().min().copied().unwrap());
    let mut labels = vec![0usize; n];
    for (label, &slot) in order.iter().enumerate() {
        for &point in &members[slot] {
            labels[point] = label;
        }
    }
    Ok(WardResult {
        partition: Partition::from_labels(labels)?,
        merges,
    })
}
