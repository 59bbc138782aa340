use std::io::BufReader;

use giant_core::sketch::{self, AlphaConstants};
use giant_core::worker::cg_iteration_budget;
use giant_core::{data, DenseMatrix, LabeledDataset, Vector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_covers_every_row_once(n in 1usize..300, m in 1usize..12, seed in any::<u64>()) {
        prop_assume!(m <= n);
        let parts = data::partition_indices(n, m, seed).unwrap();
        let mut all: Vec<usize> = parts.concat();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(parts.iter().all(|p| !p.is_empty()));
    }

    #[test]
    fn libsvm_round_trips(rows in prop::collection::vec(
        (prop::bool::ANY, prop::collection::vec(-1e6f64..1e6, 5)), 1..20)) {
        let mut x: Vec<Vec<f64>> = rows.iter().map(|(_, r)| r.clone()).collect();
        x[0][4] = 1.0;
        let labels: Vector = rows.iter().map(|(b, _)| if *b { 1.0 } else { -1.0 }).collect();
        let original = LabeledDataset::new(DenseMatrix::from_rows(&x).unwrap(), labels).unwrap();
        let mut buf = Vec::new();
        data::write_libsvm(&mut buf, &original).unwrap();
        let parsed = data::parse_libsvm(BufReader::new(buf.as_slice())).unwrap();
        prop_assert_eq!(parsed, original);
    }

    #[test]
    fn coherence_lies_in_unit_range(n in 4usize..40, d in 1usize..4, seed in any::<u64>()) {
        prop_assume!(d < n);
        let a = giant_core::rng::gaussian_matrix(&mut giant_core::rng::rng(seed), n, d);
        let mu = sketch::row_coherence(&a).unwrap();
        prop_assert!((1.0 - 1e-9..=n as f64 / d as f64 + 1e-9).contains(&mu));
    }

    #[test]
    fn alpha_grows_with_eta(e1 in 0.01f64..0.98, e2 in 0.01f64..0.98, vt in 0.01f64..1.0, m in 1usize..64) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let at = |eta| AlphaConstants { eta, m, vartheta: vt, epsilon0: 0.0 }.alpha();
        prop_assert!(at(lo) <= at(hi));
    }

    #[test]
    fn cg_budget_grows_with_condition(k1 in 1.5f64..1e6, k2 in 1.5f64..1e6, eps in 0.01f64..0.9) {
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        prop_assert!(cg_iteration_budget(lo, eps).unwrap() <= cg_iteration_budget(hi, eps).unwrap());
    }

    #[test]
    fn sample_size_shrinks_with_eta(e1 in 0.05f64..0.95, e2 in 0.05f64..0.95) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let s = |eta| sketch::uniform_sample_size(1.5, 8, 4, eta, 0.1).unwrap();
        prop_assert!(s(hi) <= s(lo));
    }
}
