//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values (run with `--nocapture` to see them).
//!
//! Every expected value is either derived from an independent oracle coded
//! here (brute-force fitting, pair enumeration, dense eigendecomposition,
//! chi-square goodness of fit) or fixed by hand calculation. Thresholds are
//! pinned in this file, not configurable.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tempfile::TempDir;

use scbench_core::cluster::{cluster_pipeline, hclust_ward, kmeans, pca, ClusteringSpec};
use scbench_core::downsample::{
    amended_downsample, match_marginals, poisson_downsample, sample_efficiencies,
    DownsampleConfig, EfficiencyVector, MarginalTargets,
};
use scbench_core::matrix::{default_ids, Preprocess, RealMatrix};
use scbench_core::metrics::{
    adjusted_rand_index, cmd, correlation_matrix, jaccard_pairs, matrix_correlations, pearson,
    r_squared, stats_comparison, Axis, Partition,
};
use scbench_core::refbuild::{simulate_synthetic, SyntheticConfig};
use scbench_core::rng::substream;

fn run_ok(args: &[&str]) {
    scbench_cli::run_from(std::iter::once("scbench").chain(args.iter().copied()))
        .expect("command failed");
}

fn dense_to_real(rows: &[Vec<f64>]) -> RealMatrix {
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

/// Simple deterministic uniform source for oracle inputs.
fn uniform_stream(seed: u64) -> impl FnMut() -> f64 {
    let mut rng = substream(seed, 0xacce97, 0);
    move || rng.random::<f64>()
}

// ---------------------------------------------------------------------
// 1. Noise-model fidelity
// ---------------------------------------------------------------------

/// Chi-square goodness-of-fit p-value of `samples` against Poisson(rate).
/// Bins with expected count below 5 are merged left to right.
fn poisson_gof_pvalue(samples: &[u64], rate: f64) -> f64 {
    let n = samples.len() as f64;
    let max_k = (rate + 10.0 * rate.sqrt() + 20.0).ceil() as usize;
    // pmf via the recurrence p_{k+1} = p_k * rate / (k + 1).
    let mut pmf = Vec::with_capacity(max_k + 1);
    let mut p = (-rate).exp();
    let mut cumulative = 0.0;
    for k in 0..=max_k {
        pmf.push(p);
        cumulative += p;
        p *= rate / (k + 1) as f64;
    }
    let tail = (1.0 - cumulative).max(0.0);

    let mut observed = vec![0.0f64; max_k + 2];
    for &s in samples {
        observed[(s as usize).min(max_k + 1)] += 1.0;
    }
    let mut expected: Vec<f64> = pmf.iter().map(|&p| p * n).collect();
    expected.push(tail * n);

    // Merge small-expectation bins.
    let mut merged_obs = Vec::new();
    let mut merged_exp = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (o, e) in observed.into_iter().zip(expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= 5.0 {
            merged_obs.push(acc_o);
            merged_exp.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 {
        if let (Some(o), Some(e)) = (merged_obs.last_mut(), merged_exp.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        }
    }
    assert!(merged_obs.len() >= 2, "degenerate binning for rate {rate}");

    let stat: f64 = merged_obs
        .iter()
        .zip(&merged_exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (merged_obs.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

#[test]
fn a01_noise_model_fidelity() {
    let started = Instant::now();

    // Spot-check grid: five reference entries in one cell, through the real
    // sampling path, 10000 replicate draws each.
    let lambdas = [0.5, 2.0, 7.0, 20.0, 100.0];
    let tau_value = 0.6;
    let reference = dense_to_real(&lambdas.iter().map(|&v| vec![v]).collect::<Vec<_>>());
    let tau = EfficiencyVector::uniform(1, tau_value).unwrap();

    let replicates = 10_000;
    let mut samples = vec![Vec::with_capacity(replicates); lambdas.len()];
    for seed in 0..replicates {
        let y = poisson_downsample(&reference, &tau, seed as u64).unwrap();
        for (g, bucket) in samples.iter_mut().enumerate() {
            bucket.push(y.value_at(g, 0) as u64);
        }
    }
    let mut p_values = Vec::new();
    for (g, bucket) in samples.iter().enumerate() {
        let p = poisson_gof_pvalue(bucket, tau_value * lambdas[g]);
        assert!(
            p >= 1e-3,
            "entry with rate {} fails goodness of fit (p = {p:.3e})",
            tau_value * lambdas[g]
        );
        p_values.push(p);
    }

    // Library-size means across 200 replicates within 3 standard errors of
    // tau_c * sum_g lambda_gc (a Poisson total per cell).
    let (counts, _) = simulate_synthetic(&SyntheticConfig {
        n_genes: 60,
        n_cells: 6,
        seed: 12,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let lambda = counts.as_real();
    let tau_values: Vec<f64> = (0..6).map(|c| 0.04 + 0.02 * c as f64).collect();
    let tau = EfficiencyVector::new(tau_values.clone()).unwrap();
    let replicates = 200;
    let mut totals = vec![0.0f64; 6];
    for seed in 0..replicates {
        let y = poisson_downsample(&lambda, &tau, 10_000 + seed).unwrap();
        for (c, s) in y.library_sizes().into_iter().enumerate() {
            totals[c] += s;
        }
    }
    let mass = lambda.library_sizes();
    for c in 0..6 {
        let expected = tau_values[c] * mass[c];
        let se = (expected / replicates as f64).sqrt();
        let empirical = totals[c] / replicates as f64;
        assert!(
            (empirical - expected).abs() <= 3.0 * se,
            "cell {c}: library-size mean {empirical} outside 3 SE of {expected}"
        );
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30 s");
    println!(
        "PASS noise-model fidelity: min GOF p = {:.4}, library sizes within 3 SE, {:.1?}",
        p_values.iter().cloned().fold(f64::INFINITY, f64::min),
        elapsed
    );
}

// ---------------------------------------------------------------------
// 2. Efficiency settings
// ---------------------------------------------------------------------

#[test]
fn a02_efficiency_settings() {
    let started = Instant::now();
    let (counts, _) = simulate_synthetic(&SyntheticConfig::default()).unwrap();
    let reference = counts.as_real();

    let mut wins = 0;
    let mut median_lo_sum = 0.0;
    let mut median_hi_sum = 0.0;
    let mut median_wins = 0;
    let trials = 50;
    for seed in 0..trials {
        let (tau_lo, _) =
            sample_efficiencies(300, &DownsampleConfig::basic(0.05, 0.3, seed)).unwrap();
        let (tau_hi, _) =
            sample_efficiencies(300, &DownsampleConfig::basic(0.10, 0.3, seed)).unwrap();
        let obs_lo = poisson_downsample(&reference, &tau_lo, seed).unwrap();
        let obs_hi = poisson_downsample(&reference, &tau_hi, seed).unwrap();
        if obs_hi.total() > obs_lo.total() {
            wins += 1;
        }

        let median = |m: &scbench_core::matrix::CountMatrix| -> f64 {
            let r = matrix_correlations(m, &reference, Axis::Gene, Preprocess::NORMALIZED_LOG)
                .unwrap();
            scbench_core::metrics::summarize_correlations(&r.values)
                .median
                .unwrap()
        };
        let (lo, hi) = (median(&obs_lo), median(&obs_hi));
        median_lo_sum += lo;
        median_hi_sum += hi;
        if hi > lo {
            median_wins += 1;
        }
    }
    assert_eq!(
        wins, trials,
        "total counts at 10% must exceed 5% in every paired trial"
    );
    assert_eq!(
        median_wins, trials,
        "median gene correlation at 10% must exceed 5% in every paired trial"
    );
    assert!(median_hi_sum > median_lo_sum);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 60 s");
    println!(
        "PASS efficiency settings: counts 50/50, median gene r {:.3} (5%) vs {:.3} (10%), {:.1?}",
        median_lo_sum / trials as f64,
        median_hi_sum / trials as f64,
        elapsed
    );
}

// ---------------------------------------------------------------------
// 3. Amended matching
// ---------------------------------------------------------------------

#[test]
fn a03_amended_matching() {
    let started = Instant::now();
    let cfg = SyntheticConfig::default(); // 200 x 300
    let (reference, _) = simulate_synthetic(&cfg).unwrap();

    let ds = DownsampleConfig::amended(2024);
    let result = amended_downsample(&reference, &reference, &ds, 1e-6, 200).unwrap();
    assert!(result.scaled.converged, "marginal matching must converge");
    assert!(result.scaled.iterations <= 200);
    assert!(result.scaled.max_marginal_error <= 1e-6);

    let comparison = stats_comparison(&reference, &result.observed, None).unwrap();
    let mean_r = comparison.mean_r.unwrap();
    let sd_r = comparison.sd_r.unwrap();
    let zf_r = comparison.zero_fraction_r.unwrap();
    assert!(mean_r >= 0.99, "mean-vs-mean r = {mean_r}");
    assert!(sd_r >= 0.95, "sd-vs-sd r = {sd_r}");
    assert!(zf_r >= 0.95, "zero-fraction r = {zf_r}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 60 s");
    println!(
        "PASS amended matching: {} iterations (err {:.2e}), mean r {:.4}, sd r {:.4}, zf r {:.4}, {:.1?}",
        result.scaled.iterations,
        result.scaled.max_marginal_error,
        mean_r,
        sd_r,
        zf_r,
        elapsed
    );
}

// ---------------------------------------------------------------------
// 4. Iterative-fitting oracle equivalence
// ---------------------------------------------------------------------

/// Brute-force marginal fitting: explicitly rescale a dense matrix's rows
/// and columns in place each iteration. Shares no code with the library's
/// factor-based implementation.
fn brute_force_fit(
    mut dense: Vec<Vec<f64>>,
    row_targets: &[f64],
    col_targets: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<Vec<f64>> {
    let n_rows = dense.len();
    let n_cols = dense[0].len();
    for _ in 0..max_iter {
        for r in 0..n_rows {
            let sum: f64 = dense[r].iter().sum();
            if sum > 0.0 {
                let f = row_targets[r] / sum;
                for v in &mut dense[r] {
                    *v *= f;
                }
            }
        }
        for c in 0..n_cols {
            let sum: f64 = (0..n_rows).map(|r| dense[r][c]).sum();
            if sum > 0.0 {
                let f = col_targets[c] / sum;
                for row in dense.iter_mut() {
                    row[c] *= f;
                }
            }
        }
        let worst_row = (0..n_rows)
            .map(|r| {
                let sum: f64 = dense[r].iter().sum();
                (sum - row_targets[r]).abs() / row_targets[r].max(1e-300)
            })
            .fold(0.0f64, f64::max);
        if worst_row <= tol {
            break;
        }
    }
    dense
}

#[test]
fn a04_fitting_oracle_equivalence() {
    let mut next = uniform_stream(404);
    let mut instances = 0;
    for trial in 0..60u64 {
        let n_rows = 2 + (trial as usize % 5); // up to 6
        let n_cols = 2 + ((trial as usize / 5) % 5); // up to 6
        let rows: Vec<Vec<f64>> = (0..n_rows)
            .map(|_| (0..n_cols).map(|_| 0.1 + 9.9 * next()).collect())
            .collect();

        // Random consistent targets: independent positive masses, columns
        // rescaled so the totals agree.
        let row_targets: Vec<f64> = (0..n_rows).map(|_| 1.0 + 9.0 * next()).collect();
        let mut col_targets: Vec<f64> = (0..n_cols).map(|_| 1.0 + 9.0 * next()).collect();
        let row_mass: f64 = row_targets.iter().sum();
        let col_mass: f64 = col_targets.iter().sum();
        for v in &mut col_targets {
            *v *= row_mass / col_mass;
        }

        let matrix = dense_to_real(&rows);
        let targets = MarginalTargets::new(
            row_targets.iter().map(|&r| r / n_cols as f64).collect(),
            col_targets.clone(),
        )
        .unwrap();
        let scaled = match_marginals(&matrix, &targets, 1e-12, 500).unwrap();
        assert!(scaled.converged, "trial {trial} did not converge");
        for w in scaled.error_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "trial {trial}: error increased");
        }
        let fast = scaled.to_matrix();

        let brute = brute_force_fit(rows, &row_targets, &col_targets, 1e-12, 500);
        for (g, row) in brute.iter().enumerate() {
            for (c, &expected) in row.iter().enumerate() {
                let got = fast.value_at(g, c);
                assert!(got >= 0.0, "trial {trial}: negative scaled value {got}");
                assert!(
                    (got - expected).abs() <= 1e-8 * expected.abs().max(1.0),
                    "trial {trial} entry ({g}, {c}): {got} vs {expected}"
                );
            }
        }
        instances += 1;
    }
    assert!(instances >= 50);
    println!("PASS fitting oracle equivalence: {instances} dense instances up to 6x6 within 1e-8");
}

// ---------------------------------------------------------------------
// 5. Metric oracles
// ---------------------------------------------------------------------

#[test]
fn a05_metric_oracles() {
    // Hand case, exact.
    let p = Partition::from_labels(vec![0, 0, 1, 1]).unwrap();
    let q = Partition::from_labels(vec![0, 1, 0, 1]).unwrap();
    let ari = adjusted_rand_index(&p, &q).unwrap();
    assert_eq!(ari, -0.5, "hand case must be exact");

    // Random independent labelings have mean ARI near 0.
    let trials = 100;
    let n = 200;
    let mut sum = 0.0;
    for t in 0..trials {
        let mut rng_a = substream(t, 0xa51, 0);
        let mut rng_b = substream(t, 0xa52, 0);
        let a: Vec<usize> = (0..n).map(|_| rng_a.random_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng_b.random_range(0..4)).collect();
        let pa = Partition::from_raw_labels(a).unwrap();
        let pb = Partition::from_raw_labels(b).unwrap();
        sum += adjusted_rand_index(&pa, &pb).unwrap();
    }
    let mean_ari = sum / trials as f64;
    assert!(
        mean_ari.abs() <= 0.05,
        "null ARI mean {mean_ari} outside [-0.05, 0.05]"
    );

    // Pair-counting Jaccard equals O(n^2) enumeration at n = 200.
    for t in 0..20u64 {
        let mut rng_a = substream(t, 0xa53, 0);
        let mut rng_b = substream(t, 0xa54, 0);
        let ka = 2 + (t as usize % 5);
        let kb = 2 + ((t as usize + 2) % 5);
        let a: Vec<usize> = (0..200).map(|_| rng_a.random_range(0..ka)).collect();
        let b: Vec<usize> = (0..200).map(|_| rng_b.random_range(0..kb)).collect();
        let pa = Partition::from_raw_labels(a.clone()).unwrap();
        let pb = Partition::from_raw_labels(b.clone()).unwrap();

        let (mut n11, mut n10, mut n01) = (0u64, 0u64, 0u64);
        for i in 0..200 {
            for j in (i + 1)..200 {
                match (a[i] == a[j], b[i] == b[j]) {
                    (true, true) => n11 += 1,
                    (true, false) => n10 += 1,
                    (false, true) => n01 += 1,
                    (false, false) => {}
                }
            }
        }
        let expected = if n11 + n10 + n01 == 0 {
            1.0
        } else {
            n11 as f64 / (n11 + n10 + n01) as f64
        };
        let got = jaccard_pairs(&pa, &pb).unwrap();
        assert!((got - expected).abs() < 1e-12, "trial {t}: {got} vs {expected}");
    }

    // Correlation-matrix distance: self-distance and the worked 2x2 case.
    let m = dense_to_real(&[
        vec![1.0, 2.0, 4.0, 0.5],
        vec![3.0, 0.0, 1.0, 2.0],
        vec![0.5, 5.0, 2.0, 1.0],
    ]);
    let r = correlation_matrix(&m, Axis::Gene, Preprocess::RAW).unwrap();
    assert!(cmd(&r, &r).unwrap().abs() <= 1e-12);

    // R1 = 2x2 identity vs R2 = all-ones: distance is 1 - 1/sqrt(2),
    // realized by an uncorrelated pair vs a perfectly correlated pair.
    let identity_like = dense_to_real(&[
        vec![2.0, 0.0, 1.0, 1.0], // centered: [1, -1, 0, 0]
        vec![1.0, 1.0, 2.0, 0.0], // centered: [0, 0, 1, -1]
    ]);
    // Rows engineered to have exactly zero centered dot product.
    let rr = correlation_matrix(&identity_like, Axis::Gene, Preprocess::RAW).unwrap();
    assert!(rr.get(0, 1).abs() < 1e-12, "engineered rows must be uncorrelated");
    let duplicated = dense_to_real(&[
        vec![1.0, 2.0, 3.0, 4.0],
        vec![2.0, 4.0, 6.0, 8.0],
    ]);
    let ones = correlation_matrix(&duplicated, Axis::Gene, Preprocess::RAW).unwrap();
    let distance = cmd(&rr, &ones).unwrap();
    assert!(
        (distance - (1.0 - 1.0 / 2f64.sqrt())).abs() <= 1e-12,
        "worked 2x2 case: {distance}"
    );

    // r_squared equals squared Pearson for simple regression.
    let mut next = uniform_stream(505);
    for _ in 0..25 {
        let x: Vec<f64> = (0..40).map(|_| next() * 20.0 - 10.0).collect();
        let y: Vec<f64> = (0..40).map(|_| next() * 20.0 - 10.0).collect();
        let r = pearson(&x, &y).unwrap().unwrap();
        let r2 = r_squared(&x, &y).unwrap().unwrap();
        assert!((r2 - r * r).abs() <= 1e-12);
    }

    println!(
        "PASS metric oracles: ARI hand case -0.5 exact, null mean {mean_ari:.4}, \
         Jaccard matches enumeration, CMD worked case within 1e-12, r2 = r^2"
    );
}

// ---------------------------------------------------------------------
// 6. Clustering baselines
// ---------------------------------------------------------------------

#[test]
fn a06_clustering_baselines() {
    // PCA explained variance vs dense eigendecomposition, matrices <= 8x8.
    let mut next = uniform_stream(606);
    for trial in 0..10 {
        let g = 3 + (trial % 6);
        let c = 3 + ((trial / 2) % 6);
        let rows: Vec<Vec<f64>> = (0..g)
            .map(|_| (0..c).map(|_| next() * 10.0).collect())
            .collect();
        let m = dense_to_real(&rows);
        let k = g.min(c);
        let result = pca(&m, k, Preprocess::RAW, false).unwrap();

        let mut data = DMatrix::zeros(c, g);
        for (gi, row) in rows.iter().enumerate() {
            let mean: f64 = row.iter().sum::<f64>() / c as f64;
            for (ci, &v) in row.iter().enumerate() {
                data[(ci, gi)] = v - mean;
            }
        }
        let cov = data.transpose() * &data / c as f64;
        let mut eig: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (j, &expected) in eig.iter().take(k).enumerate() {
            let got = result.explained_variance[j];
            assert!(
                (got - expected.max(0.0)).abs() <= 1e-6 * expected.abs().max(1.0),
                "trial {trial} component {j}: {got} vs {expected}"
            );
        }
    }

    // Ward merge sequence equals brute-force agglomeration for n <= 10.
    for trial in 0..6u64 {
        let mut rng = substream(trial, 0xbb, 0);
        let n = 6 + (trial as usize % 5);
        let points = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() * 8.0);
        let fast = hclust_ward(&points, 1).unwrap();
        let brute = ward_brute_force(&points);
        assert_eq!(fast.merges.len(), brute.len());
        for (m, (a, b, cost)) in fast.merges.iter().zip(&brute) {
            assert_eq!((m.a, m.b), (*a, *b), "trial {trial}");
            assert!((m.height - cost).abs() <= 1e-9 * cost.max(1.0));
        }
    }

    // k-means inertia is monotone non-increasing.
    let mut rng = substream(7, 0xcc, 0);
    let points = DMatrix::from_fn(60, 3, |_, _| rng.random::<f64>() * 10.0);
    let km = kmeans(&points, 4, 11).unwrap();
    for w in km.inertia_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "inertia increased: {} -> {}", w[0], w[1]);
    }

    // Planted-structure recovery on the default synthetic configuration.
    let (m, truth) = simulate_synthetic(&SyntheticConfig::default()).unwrap();
    let spec = ClusteringSpec {
        k: 3,
        n_pcs: 10,
        seed: 5,
        ..ClusteringSpec::default()
    };
    let partition = cluster_pipeline(&m, &spec).unwrap();
    let ari = adjusted_rand_index(&partition, &truth).unwrap();
    assert!(ari > 0.9, "pipeline ARI {ari} below 0.9");

    println!(
        "PASS clustering baselines: PCA matches dense eigensolver (1e-6), \
         Ward matches brute force, inertia monotone, pipeline ARI {ari:.3}"
    );
}

/// Brute-force Ward oracle: recompute all pair costs from centroids each step.
fn ward_brute_force(points: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let n = points.nrows();
    let d = points.ncols();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut next_id = n;
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let centroid = |members: &[usize]| -> Vec<f64> {
            let mut c = vec![0.0; d];
            for &m in members {
                for j in 0..d {
                    c[j] += points[(m, j)];
                }
            }
            for v in &mut c {
                *v /= members.len() as f64;
            }
            c
        };
        let mut best = f64::INFINITY;
        let mut pair = (0, 1);
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let ca = centroid(&clusters[i].1);
                let cb = centroid(&clusters[j].1);
                let sq: f64 = ca.iter().zip(&cb).map(|(a, b)| (a - b) * (a - b)).sum();
                let (na, nb) = (clusters[i].1.len() as f64, clusters[j].1.len() as f64);
                let cost = na * nb / (na + nb) * sq;
                if cost < best {
                    best = cost;
                    pair = (i, j);
                }
            }
        }
        let (i, j) = pair;
        merges.push((
            clusters[i].0.min(clusters[j].0),
            clusters[i].0.max(clusters[j].0),
            best,
        ));
        let (_, members_j) = clusters.remove(j);
        clusters[i].1.extend(members_j);
        clusters[i].0 = next_id;
        next_id += 1;
    }
    merges
}

// ---------------------------------------------------------------------
// 7. Perfect-recovery sanity (end to end through the CLI)
// ---------------------------------------------------------------------

#[test]
fn a07_perfect_recovery_sanity() {
    let dir = TempDir::new().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    run_ok(&[
        "simulate",
        "--genes", "150",
        "--cells", "120",
        "--clusters", "3",
        "--seed", "7",
        "--output", &path("ref.mtx"),
        "--labels", &path("truth.csv"),
        "--provenance", &path("sim.json"),
    ]);
    run_ok(&[
        "downsample",
        "--reference", &path("ref.mtx"),
        "--mode", "basic",
        "--efficiency", "0.05",
        "--seed", "3",
        "--output", &path("obs.mtx"),
        "--provenance", &path("obs.json"),
    ]);
    std::fs::write(
        dir.path().join("manifest.json"),
        r#"{
            "reference": "ref.mtx",
            "observed": "obs.mtx",
            "methods": [{"name": "perfect", "path": "ref.mtx", "labels": "truth.csv"}],
            "reference_labels": "truth.csv",
            "observed_labels": "truth.csv"
        }"#,
    )
    .unwrap();
    run_ok(&[
        "eval",
        "--manifest", &path("manifest.json"),
        "--out-dir", &path("results"),
    ]);

    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("results/evaluation.json")).unwrap(),
    )
    .unwrap();
    let methods = report["results"]["methods"].as_array().unwrap();
    let perfect = methods.iter().find(|m| m["method"] == "perfect").unwrap();
    let observed = methods.iter().find(|m| m["method"] == "observed").unwrap();

    assert_eq!(perfect["gene_correlation"]["median"], 1.0);
    assert_eq!(perfect["cell_correlation"]["median"], 1.0);
    assert!(perfect["cmd_gene"].as_f64().unwrap().abs() <= 1e-12);
    assert!(perfect["cmd_cell"].as_f64().unwrap().abs() <= 1e-12);
    assert_eq!(perfect["ari"], 1.0);
    assert_eq!(perfect["jaccard"], 1.0);

    // Every defined per-gene correlation of the perfect method is 1.
    let csv = std::fs::read_to_string(dir.path().join("results/perfect.gene_correlations.csv"))
        .unwrap();
    for line in csv.lines().skip(1) {
        let r = line.split(',').nth(1).unwrap();
        if !r.is_empty() {
            assert!(
                (r.parse::<f64>().unwrap() - 1.0).abs() <= 1e-12,
                "per-gene correlation {r} is not 1"
            );
        }
    }

    let observed_median = observed["gene_correlation"]["median"].as_f64().unwrap();
    assert!(
        observed_median < 1.0,
        "observed baseline must score strictly worse (median {observed_median})"
    );

    println!(
        "PASS perfect-recovery sanity: perfect method all 1/0, observed median gene r {:.3} < 1",
        observed_median
    );
}

// ---------------------------------------------------------------------
// 8. Determinism across worker counts
// ---------------------------------------------------------------------

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let entry = entry.unwrap();
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_str().unwrap().to_string();
                files.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    files
}

#[test]
fn a08_determinism_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    let chain = |workers: &str| {
        run_ok(&[
            "--workers", workers,
            "simulate",
            "--genes", "150",
            "--cells", "120",
            "--clusters", "3",
            "--seed", "11",
            "--output", &path("counts.mtx"),
            "--labels", &path("truth.csv"),
            "--provenance", &path("sim.json"),
        ]);
        run_ok(&[
            "--workers", workers,
            "build-ref",
            "--input", &path("counts.mtx"),
            "--output", &path("ref.mtx"),
            "--report", &path("ref.json"),
            "--min-library-size", "50",
            "--min-gene-mean", "0.2",
            "--min-nonzero-frac", "0.05",
        ]);
        run_ok(&[
            "--workers", workers,
            "downsample",
            "--reference", &path("ref.mtx"),
            "--mode", "basic",
            "--efficiency", "0.05",
            "--seed", "13",
            "--output", &path("obs.mtx"),
            "--provenance", &path("obs.json"),
        ]);
        run_ok(&[
            "--workers", workers,
            "downsample",
            "--reference", &path("ref.mtx"),
            "--mode", "amended",
            "--original", &path("counts.mtx"),
            "--seed", "13",
            "--output", &path("obs_amended.mtx"),
            "--provenance", &path("obs_amended.json"),
        ]);
        run_ok(&[
            "--workers", workers,
            "cluster",
            "--input", &path("obs.mtx"),
            "--method", "kmeans",
            "--k", "3",
            "--n-pcs", "10",
            "--seed", "17",
            "--output", &path("obs_labels.csv"),
            "--provenance", &path("cluster.json"),
            "--scores-csv", &path("scores.csv"),
        ]);
        run_ok(&[
            "--workers", workers,
            "cluster",
            "--input", &path("ref.mtx"),
            "--method", "hclust-ward-pc",
            "--k", "3",
            "--n-pcs", "10",
            "--seed", "17",
            "--output", &path("ref_labels.csv"),
            "--provenance", &path("cluster_ref.json"),
        ]);
        std::fs::write(
            dir.path().join("manifest.json"),
            r#"{
                "reference": "ref.mtx",
                "observed": "obs.mtx",
                "methods": [{"name": "perfect", "path": "ref.mtx", "labels": "ref_labels.csv"}],
                "reference_labels": "ref_labels.csv",
                "observed_labels": "obs_labels.csv"
            }"#,
        )
        .unwrap();
        run_ok(&[
            "--workers", workers,
            "eval",
            "--manifest", &path("manifest.json"),
            "--out-dir", &path("results"),
        ]);
        run_ok(&[
            "--workers", workers,
            "compare-stats",
            "--original", &path("counts.mtx"),
            "--other", &path("obs_amended.mtx"),
            "--output-csv", &path("stats.csv"),
            "--summary", &path("stats.json"),
        ]);
    };

    chain("1");
    let single = snapshot(dir.path());
    chain("8");
    let many = snapshot(dir.path());

    assert_eq!(
        single.keys().collect::<Vec<_>>(),
        many.keys().collect::<Vec<_>>(),
        "file sets differ"
    );
    for (name, bytes) in &single {
        assert_eq!(
            bytes, &many[name],
            "{name} differs between worker counts 1 and 8"
        );
    }

    println!(
        "PASS determinism: {} artifacts byte-identical at worker counts 1 and 8",
        single.len()
    );
}

// ---------------------------------------------------------------------
// 9. Runtime budget
// ---------------------------------------------------------------------

#[test]
fn a09_runtime_budget() {
    // A complete benchmark cycle must be fast enough that the whole test
    // suite (this file plus the unit and property suites) stays well under
    // five minutes on a small machine; the cycle itself gets two minutes.
    let started = Instant::now();
    let dir = TempDir::new().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    run_ok(&[
        "simulate",
        "--seed", "1",
        "--output", &path("counts.mtx"),
        "--labels", &path("truth.csv"),
        "--provenance", &path("sim.json"),
    ]);
    run_ok(&[
        "build-ref",
        "--input", &path("counts.mtx"),
        "--output", &path("ref.mtx"),
        "--report", &path("ref.json"),
        "--min-library-size", "100",
        "--min-gene-mean", "0.2",
        "--min-nonzero-frac", "0.05",
    ]);
    run_ok(&[
        "downsample",
        "--reference", &path("ref.mtx"),
        "--mode", "amended",
        "--original", &path("counts.mtx"),
        "--seed", "2",
        "--output", &path("obs.mtx"),
        "--provenance", &path("obs.json"),
    ]);
    run_ok(&[
        "cluster",
        "--input", &path("obs.mtx"),
        "--method", "hclust-ward-pc",
        "--k", "9",
        "--n-pcs", "10",
        "--seed", "3",
        "--output", &path("labels.csv"),
        "--provenance", &path("cluster.json"),
    ]);
    run_ok(&[
        "cluster",
        "--input", &path("ref.mtx"),
        "--method", "kmeans",
        "--k", "3",
        "--n-pcs", "10",
        "--seed", "3",
        "--output", &path("ref_labels.csv"),
        "--provenance", &path("cluster_ref.json"),
    ]);
    std::fs::write(
        dir.path().join("manifest.json"),
        r#"{
            "reference": "ref.mtx",
            "observed": "obs.mtx",
            "methods": [{"name": "perfect", "path": "ref.mtx", "labels": "ref_labels.csv"}],
            "reference_labels": "ref_labels.csv"
        }"#,
    )
    .unwrap();
    run_ok(&[
        "eval",
        "--manifest", &path("manifest.json"),
        "--out-dir", &path("results"),
    ]);
    run_ok(&[
        "compare-stats",
        "--original", &path("counts.mtx"),
        "--other", &path("obs.mtx"),
        "--output-csv", &path("stats.csv"),
        "--summary", &path("stats.json"),
        "--svg", &path("stats.svg"),
    ]);

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 120,
        "full benchmark cycle took {elapsed:?}, budget 120 s"
    );
    println!("PASS runtime budget: full benchmark cycle in {elapsed:.1?}");
}
