//! Property tests for the matrix data model and file formats.

use proptest::prelude::*;
use tempfile::TempDir;

use scbench_core::matrix::{
    default_ids, read_matrix, write_matrix, AnyMatrix, CountMatrix, MatrixFormat, RealMatrix,
};

fn count_matrix_strategy(max_dim: usize) -> impl Strategy<Value = CountMatrix> {
    (1..=max_dim, 1..=max_dim)
        .prop_flat_map(|(g, c)| {
            proptest::collection::vec(
                prop_oneof![3 => Just(0u64), 2 => 1u64..500],
                g * c,
            )
            .prop_map(move |values| {
                let triplets: Vec<(usize, usize, u64)> = values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 0)
                    .map(|(i, &v)| (i / c, i % c, v))
                    .collect();
                CountMatrix::from_triplets(default_ids("G", g), default_ids("C", c), triplets)
                    .unwrap()
            })
        })
}

fn real_matrix_strategy(max_dim: usize) -> impl Strategy<Value = RealMatrix> {
    (1..=max_dim, 1..=max_dim)
        .prop_flat_map(|(g, c)| {
            proptest::collection::vec(
                prop_oneof![2 => Just(0.0f64), 3 => 0.001f64..1000.0],
                g * c,
            )
            .prop_map(move |values| {
                let triplets: Vec<(usize, usize, f64)> = values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(i, &v)| (i / c, i % c, v))
                    .collect();
                RealMatrix::from_triplets(default_ids("G", g), default_ids("C", c), triplets)
                    .unwrap()
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_market_count_round_trip(m in count_matrix_strategy(12)) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix(&m, &path, MatrixFormat::MatrixMarket).unwrap();
        let back = read_matrix(&path, MatrixFormat::MatrixMarket).unwrap();
        prop_assert_eq!(back, AnyMatrix::Counts(m));
    }

    #[test]
    fn matrix_market_real_round_trip(m in real_matrix_strategy(12)) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix(&m, &path, MatrixFormat::MatrixMarket).unwrap();
        let back = read_matrix(&path, MatrixFormat::MatrixMarket).unwrap();
        // Values are serialized with exact round-trip formatting.
        prop_assert_eq!(back, AnyMatrix::Reals(m));
    }

    #[test]
    fn dense_csv_round_trip(m in count_matrix_strategy(10)) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix(&m, &path, MatrixFormat::DenseCsv).unwrap();
        let back = read_matrix(&path, MatrixFormat::DenseCsv).unwrap();
        prop_assert_eq!(back, AnyMatrix::Counts(m));
    }

    #[test]
    fn dense_csv_real_round_trip(m in real_matrix_strategy(8)) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix(&m, &path, MatrixFormat::DenseCsv).unwrap();
        let back = read_matrix(&path, MatrixFormat::DenseCsv).unwrap();
        // A real matrix whose stored values are all integral reads back as
        // counts (CSV carries no type header); compare as reals.
        prop_assert_eq!(back.to_real(), m);
    }

    #[test]
    fn accounting_identity(m in count_matrix_strategy(20)) {
        let lib_total: f64 = m.library_sizes().iter().sum();
        let mean_total: f64 = m
            .gene_summaries()
            .iter()
            .map(|s| s.mean * m.n_cells() as f64)
            .sum();
        // Exact for integer matrices.
        prop_assert!((lib_total - mean_total).abs() <= 1e-9 * lib_total.max(1.0));
    }

    #[test]
    fn gene_summaries_match_dense_brute_force(m in count_matrix_strategy(50)) {
        let dense = m.to_dense_rows();
        let summaries = m.gene_summaries();
        for (g, row) in dense.iter().enumerate() {
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let zeros = row.iter().filter(|&&v| v == 0.0).count() as f64;
            prop_assert!((summaries[g].mean - mean).abs() < 1e-9);
            prop_assert!((summaries[g].sd - var.sqrt()).abs() < 1e-9);
            prop_assert!((summaries[g].zero_fraction - zeros / n).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_composes(
        m in count_matrix_strategy(12),
        keep_g in proptest::collection::vec(any::<prop::sample::Index>(), 1..6),
        keep_c in proptest::collection::vec(any::<prop::sample::Index>(), 1..6),
        inner_g in proptest::collection::vec(any::<prop::sample::Index>(), 1..4),
        inner_c in proptest::collection::vec(any::<prop::sample::Index>(), 1..4),
    ) {
        // Build duplicate-free index lists from the index generators.
        let dedup = |idx: &[prop::sample::Index], n: usize| -> Vec<usize> {
            let mut seen = std::collections::HashSet::new();
            let mut out = Vec::new();
            for i in idx {
                let v = i.index(n);
                if seen.insert(v) {
                    out.push(v);
                }
            }
            out
        };
        let a = dedup(&keep_g, m.n_genes());
        let b = dedup(&keep_c, m.n_cells());
        let a2 = dedup(&inner_g, a.len());
        let b2 = dedup(&inner_c, b.len());

        let two_step = m.subset(&a, &b).unwrap().subset(&a2, &b2).unwrap();
        let composed_g: Vec<usize> = a2.iter().map(|&i| a[i]).collect();
        let composed_c: Vec<usize> = b2.iter().map(|&i| b[i]).collect();
        let one_step = m.subset(&composed_g, &composed_c).unwrap();
        prop_assert_eq!(two_step, one_step);
    }

    #[test]
    fn subset_summaries_match_recompute(m in count_matrix_strategy(12)) {
        // Summary of a subset equals a direct recomputation on dense data.
        let genes: Vec<usize> = (0..m.n_genes()).step_by(2).collect();
        let cells: Vec<usize> = (0..m.n_cells()).step_by(2).collect();
        let s = m.subset(&genes, &cells).unwrap();
        let dense = m.to_dense_rows();
        for (new_g, &old_g) in genes.iter().enumerate() {
            let row: Vec<f64> = cells.iter().map(|&c| dense[old_g][c]).collect();
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            prop_assert!((s.gene_summaries()[new_g].mean - mean).abs() < 1e-9);
        }
    }
}
