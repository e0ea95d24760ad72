mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_rank::linalg::{frozen_set, pin, RelationStructure};
use sparse_rank::pinning::{
    default_horizon, freeness_with, frozen_growth, independence_experiment, pairwise_dependence, GrowthOptions,
};
use sparse_rank::{FieldSpec, SparseMatrix};

/// Pair discrepancy over unordered pairs and all value pairs, from the
/// enumerated kernel, divided by `n^2`.
fn enumerated_tv(m: &SparseMatrix) -> (f64, Vec<(usize, usize, f64)>) {
    let q = m.field().modulus() as usize;
    let n = m.n_cols();
    let kernel = kernel_by_enumeration(m);
    let total = kernel.len() as f64;
    let marginal = |i: usize, w: usize| kernel.iter().filter(|x| x[i] as usize == w).count() as f64 / total;
    let mut per_pair = Vec::new();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let mut tv = 0.0;
            for w in 0..q {
                for w2 in 0..q {
                    let joint =
                        kernel.iter().filter(|x| x[i] as usize == w && x[j] as usize == w2).count() as f64 / total;
                    tv += (joint - marginal(i, w) * marginal(j, w2)).abs();
                }
            }
            per_pair.push((i, j, tv));
            sum += tv;
        }
    }
    (sum / (n * n) as f64, per_pair)
}

#[test]
fn pair_dependence_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for q in [2u32, 3] {
        for _ in 0..150 {
            let rows = rng.random_range(1..7);
            let cols = rng.random_range(2..=7);
            let m = random_matrix(&mut rng, rows, cols, q, 0.35);
            let report = pairwise_dependence(&m).unwrap();
            let (want, pairs) = enumerated_tv(&m);
            assert!((report.pair_tv_sum - want).abs() < 1e-12, "{} vs {want}", report.pair_tv_sum);
            assert_eq!(report.violations, 0);
            let s = RelationStructure::new(&m);
            let mut proper = 0;
            for (i, j, tv) in pairs {
                if s.is_proper(&[i, j]) {
                    proper += 1;
                    assert!(tv > 0.0);
                } else {
                    assert_eq!(tv, 0.0, "pair ({i},{j}) is not a proper relation");
                }
            }
            assert_eq!(report.proper_pairs, proper);
        }
    }
}

#[test]
fn single_row_pair_carries_whole_discrepancy() {
    let m = SparseMatrix::from_dense(FieldSpec::Prime(2), &[vec![1, 1]]).unwrap();
    let r = pairwise_dependence(&m).unwrap();
    // kernel {00, 11}: joint puts 1/2 on two cells, product 1/4 on four
    assert!((r.pair_tv_sum - 1.0 / 4.0).abs() < 1e-15);
    assert_eq!(r.proper_pairs, 1);
    let id = pairwise_dependence(&SparseMatrix::identity(5, FieldSpec::Prime(3))).unwrap();
    assert_eq!(id.pair_tv_sum, 0.0);
}

#[test]
fn rational_proxy_is_rejected() {
    let m = SparseMatrix::identity(3, FieldSpec::rational_proxy(2_147_483_647).unwrap());
    assert!(pairwise_dependence(&m).is_err());
    assert!(independence_experiment(&m, 4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

#[test]
fn identity_growth_is_flat() {
    let m = SparseMatrix::identity(12, FieldSpec::Prime(2));
    let steps = frozen_growth(&m, &GrowthOptions::new(2, 30), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(steps.len(), 31);
    for s in &steps {
        assert_eq!(s.frozen, 12);
        assert!(s.delta.is_none_or(|d| d == 0.0));
    }
}

#[test]
fn zero_matrix_freezes_pinned_columns_only() {
    let m = SparseMatrix::zeros(3, 40, FieldSpec::Prime(5));
    let steps = frozen_growth(&m, &GrowthOptions::new(1, 60), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    for w in steps.windows(2) {
        assert!(w[1].frozen == w[0].frozen || w[1].frozen == w[0].frozen + 1);
    }
    assert_eq!(steps[0].frozen, 0);
}

#[test]
fn growth_gain_averages_below_budget() {
    // the budget bounds the expectation over matrices and pin paths, so the
    // slack comes from the spread of per-path averages
    let ell = 2;
    let horizon = default_horizon(0.5, ell);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let path_means: Vec<f64> = (0..20)
        .map(|_| {
            let m = random_matrix(&mut rng, 70, 100, 2, 0.03);
            let mut opts = GrowthOptions::new(ell, horizon);
            opts.continuations = 8;
            let steps = frozen_growth(&m, &opts, &mut rng).unwrap();
            let est: Vec<f64> = steps.iter().filter_map(|s| s.delta).collect();
            assert_eq!(est.len(), horizon);
            est.iter().sum::<f64>() / horizon as f64
        })
        .collect();
    let (mean, se) = sparse_rank::pinning::mean_and_std_error(&path_means);
    assert!(mean <= ell as f64 / horizon as f64 + 3.0 * se, "{mean} +- {se}");
}

#[test]
fn identity_is_always_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = freeness_with(|_| Ok(SparseMatrix::identity(10, FieldSpec::Prime(2))), 0.5, 2, 5, 20, &mut rng).unwrap();
    assert_eq!(r.fraction_free, 1.0);
    assert!(r.proper_relation_counts.iter().all(|&c| c == 0));
    let r = freeness_with(|r| Ok(random_matrix(r, 10, 10, 2, 0.5)), 0.5, 2, 0, 10, &mut rng).unwrap();
    assert!(r.theta_draws.iter().all(|&t| t == 0));
    assert_eq!(r.proper_relation_counts.len(), 10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn frozen_set_only_grows(seed in any::<u64>(), q in prop::sample::select(vec![2u32, 3, 7])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, 15, 20, q, 0.12);
        let mut cols: Vec<usize> = Vec::new();
        let mut before = frozen_set(&m);
        for _ in 0..8 {
            cols.push(rng.random_range(0..20));
            let after = frozen_set(&m.with_unit_rows(&cols).unwrap());
            prop_assert!(before.iter().all(|c| after.contains(c)));
            before = after;
        }
    }

    #[test]
    fn pinned_pairs_have_exact_independence(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, 10, 16, 3, 0.15);
        let pinned = pin(&m, rng.random_range(0..6), &mut rng).unwrap();
        prop_assert_eq!(pairwise_dependence(&pinned).unwrap().violations, 0);
    }
}
