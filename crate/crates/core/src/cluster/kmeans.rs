//! Seeded k-means with k-means++ initialization and Lloyd iterations.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::Partition;
use crate::rng::{domain, substream};

/// Output of one k-means run.
#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub partition: Partition,
    /// Sum of squared distances from each point to its centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_history: Vec<f64>,
}

const MAX_ITERATIONS: usize = 300;

/// Cluster the rows of `points` into `k` groups.
///
/// k-means++ seeding from the given seed, then Lloyd iterations until the
/// assignment is a fixed point (or 300 iterations). Empty clusters are
/// repaired by reseeding from the point farthest from its centroid.
/// Deterministic for a given seed.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<KmeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "k must be in 1..={n} for {n} points, got {k}"
        )));
    }

    let mut rng = substream(seed, domain::KMEANS, 0);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignment = vec![usize::MAX; n];
    let mut inertia_history: Vec<f64> = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;

        // Assignment step; ties break to the lowest centroid index.
        let mut new_assignment = vec![0usize; n];
        let mut distances = vec![0.0f64; n];
        for i in 0..n {
            let (best, d) = nearest_centroid(points, i, &centroids);
            new_assignment[i] = best;
            distances[i] = d;
        }

        // Repair empty clusters from the farthest point of a cluster that
        // can spare one.
        let mut sizes = vec![0usize; k];
        for &a in &new_assignment {
            sizes[a] += 1;
        }
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[new_assignment[i]] > 1)
                .max_by(|&a, &b| distances[a].partial_cmp(&distances[b]).unwrap())
                .expect("k <= n guarantees a donor point");
            sizes[new_assignment[donor]] -= 1;
            new_assignment[donor] = j;
            sizes[j] = 1;
            distances[donor] = 0.0;
        }

        let inertia: f64 = distances.iter().sum();
        if let Some(&prev) = inertia_history.last() {
            debug_assert!(inertia <= prev + 1e-9 * prev.abs().max(1.0));
        }
        inertia_history.push(inertia);

        let converged = new_assignment == assignment;
        assignment = new_assignment;
        if converged || iterations >= MAX_ITERATIONS {
            let partition = Partition::from_labels(assignment)?;
            return Ok(KmeansResult {
                partition,
                inertia,
                iterations,
                inertia_history,
            });
        }

        // Update step.
        let d = points.ncols();
        let mut sums = vec![vec![0.0f64; d]; k];
        for (i, &a) in assignment.iter().enumerate() {
            for j in 0..d {
                sums[a][j] += points[(i, j)];
            }
        }
        for (c, sum) in sums.iter().enumerate() {
            for j in 0..d {
                centroids[(c, j)] = sum[j] / sizes[c] as f64;
            }
        }
    }
}

fn squared_distance(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..points.ncols() {
        let d = points[(i, j)] - centroids[(c, j)];
        s += d * d;
    }
    s
}

fn nearest_centroid(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = squared_distance(points, i, centroids, 0);
    for c in 1..centroids.nrows() {
        let d = squared_distance(points, i, centroids, c);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    (best, best_d)
}

/// k-means++: subsequent centers drawn with probability proportional to the
/// squared distance to the nearest chosen center.
fn plus_plus_init<R: Rng>(points: &DMatrix<f64>, k: usize, rng: &mut R) -> DMatrix<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mut centroids = DMatrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&points.row(first));

    let mut nearest = vec![f64::INFINITY; n];
    for chosen in 1..k {
        for i in 0..n {
            let dist = squared_distance(points, i, &centroids, chosen - 1);
            if dist < nearest[i] {
                nearest[i] = dist;
            }
        }
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            // All remaining points coincide with chosen centers.
            rng.random_range(0..n)
        };
        centroids.row_mut(chosen).copy_from(&points.row(pick));
    }
    centroids
}
