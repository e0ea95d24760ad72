use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_rank::linalg::{nullity, SparseMatrix};
use sparse_rank::peeling::{core_nullity_bound_count, two_core_random_order};
use sparse_rank::sampler::{sample_ensemble_graph, sample_matrix};
use sparse_rank::{two_core, EnsembleSpec, EntryMap, FieldSpec, TannerGraph};

fn graph(spec: &str, n: usize, seed: u64) -> TannerGraph {
    let ens: EnsembleSpec = spec.parse().unwrap();
    sample_ensemble_graph(&ens, n, &mut ChaCha8Rng::seed_from_u64(seed), true).unwrap()
}

/// The submatrix on surviving rows and columns, relabelled densely.
fn core_matrix(a: &SparseMatrix, rows: &[bool], cols: &[bool]) -> SparseMatrix {
    let relabel = |alive: &[bool]| {
        let mut next = 0;
        alive
            .iter()
            .map(|&x| {
                let id = x.then_some(next);
                next += usize::from(x);
                id
            })
            .collect::<Vec<Option<usize>>>()
    };
    let (r, c) = (relabel(rows), relabel(cols));
    let entries: Vec<(usize, usize, u64)> = a
        .entries()
        .filter_map(|(i, j, v)| Some((r[i]?, c[j]?, u64::from(v))))
        .collect();
    let nr = rows.iter().filter(|&&x| x).count();
    let nc = cols.iter().filter(|&&x| x).count();
    SparseMatrix::new(nr, nc, a.field(), entries).unwrap()
}

#[test]
fn core_does_not_depend_on_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (t, spec) in ["po:2.7;point:3", "po:2;point:3", "po:2.5;po:2.5"].iter().cycle().take(100).enumerate() {
        let g = graph(spec, 2000, t as u64);
        let a = two_core(&g);
        let b = two_core_random_order(&g, &mut rng);
        assert_eq!(a.var_alive, b.var_alive);
        assert_eq!(a.check_alive, b.check_alive);
    }
}

#[test]
fn core_is_closed_and_has_min_degree_two() {
    for t in 0..100 {
        let g = graph("po:2.7;point:3", 2000, 100 + t);
        let core = two_core(&g);
        let var_nb = g.var_neighbors();
        for (x, nb) in var_nb.iter().enumerate() {
            if core.var_alive[x] {
                assert!(nb.iter().filter(|&&a| core.check_alive[a]).count() >= 2);
            }
        }
        for (a, nb) in g.check_neighbors().iter().enumerate() {
            if core.check_alive[a] {
                assert!(nb.iter().all(|&x| core.var_alive[x]), "surviving check {a} lost a variable");
            }
        }
        assert_eq!(core.peel_order.len(), g.n_vars - core.core_vars);
    }
}

#[test]
fn peeling_accounts_for_nullity_exactly() {
    // each peeled variable adds one to the nullity and each peeled check
    // removes one, so nul(A) = bound + nul(core)
    for t in 0..100 {
        let g = graph(if t % 2 == 0 { "po:2.7;point:3" } else { "po:2.2;po:2.2" }, 2000, 200 + t);
        let mut rng = ChaCha8Rng::seed_from_u64(t);
        let a = sample_matrix(&g, FieldSpec::Prime(2), EntryMap::AllOnes, &mut rng).unwrap();
        let core = two_core(&g);
        let bound = core_nullity_bound_count(&g, &core);
        let inner = core_matrix(&a, &core.check_alive, &core.var_alive);
        assert_eq!(nullity(&a) as i64, bound + nullity(&inner) as i64);
        assert!(nullity(&a) as i64 >= bound);
    }
}

#[test]
fn sparse_regime_has_empty_core() {
    for t in 0..10 {
        let core = two_core(&graph("po:1.2;point:3", 20_000, 300 + t));
        assert!(core.core_vars < 50, "{}", core.core_vars);
    }
}

#[test]
fn million_edge_peel_is_fast() {
    let g = graph("po:3;point:3", 333_334, 7);
    assert!(g.n_edges() > 900_000);
    let start = Instant::now();
    let core = two_core(&g);
    let elapsed = start.elapsed();
    eprintln!("peeled {} edges in {elapsed:?}, core {}", g.n_edges(), core.core_vars);
    assert!(elapsed.as_secs_f64() < 30.0);
}

#[test]
fn singleton_checks_keep_every_degree_two_variable() {
    // hyperedges of size one never peel anything, so the core is the set of
    // variables of degree at least two and every check on them
    let ens: EnsembleSpec = "pmf:0=0.3,1=0.2,3=0.5;point:1".parse().unwrap();
    let p = sparse_rank::rank_prediction(&ens).unwrap();
    let n = 20_000;
    let core = two_core(&graph("pmf:0=0.3,1=0.2,3=0.5;point:1", n, 400));
    assert!((core.core_vars as f64 / n as f64 - p.core_var_fraction).abs() < 0.01);
    assert!((core.core_checks as f64 / n as f64 - p.core_check_fraction).abs() < 0.02);
}
