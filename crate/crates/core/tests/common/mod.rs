//! Independent oracles shared by the integration tests. None of these call
//! the elimination code: spans and kernels are enumerated outright, and the
//! closed forms are written out by hand for the ensembles they cover.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::Rng;
use sparse_rank::{FieldSpec, SparseMatrix};

/// Random matrix with each entry nonzero independently with probability `density`.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, q: u32, density: f64) -> SparseMatrix {
    let mut entries = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                entries.push((i, j, u64::from(rng.random_range(1..q))));
            }
        }
    }
    SparseMatrix::new(rows, cols, FieldSpec::Prime(q), entries).unwrap()
}

/// Every vector of the row space, built by closing `{0}` under adding
/// multiples of each row.
pub fn span(m: &SparseMatrix) -> HashSet<Vec<u32>> {
    let q = m.field().modulus();
    let dense = m.to_dense();
    let mut set: HashSet<Vec<u32>> = HashSet::from([vec![0; m.n_cols()]]);
    for row in &dense {
        let mut next = HashSet::with_capacity(set.len() * q as usize);
        for v in &set {
            for c in 0..q {
                next.insert(v.iter().zip(row).map(|(&a, &b)| (a + c * b) % q).collect::<Vec<u32>>());
            }
        }
        set = next;
    }
    set
}

/// `log_q` of the span size.
pub fn span_rank(m: &SparseMatrix) -> usize {
    let q = m.field().modulus() as usize;
    let mut size = span(m).len();
    let mut r = 0;
    while size > 1 {
        assert_eq!(size % q, 0);
        size /= q;
        r += 1;
    }
    r
}

/// All solutions of `A x = 0`, by enumerating `F_q^n`.
pub fn kernel_by_enumeration(m: &SparseMatrix) -> Vec<Vec<u32>> {
    let q = m.field().modulus();
    let n = m.n_cols();
    let dense = m.to_dense();
    let total = (q as usize).pow(n as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut x = vec![0u32; n];
        let mut c = code;
        for slot in x.iter_mut() {
            *slot = (c % q as usize) as u32;
            c /= q as usize;
        }
        if dense.iter().all(|row| row.iter().zip(&x).map(|(&a, &b)| a * b).sum::<u32>() % q == 0) {
            out.push(x);
        }
    }
    out
}

pub fn support(v: &[u32]) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, _)| i).collect()
}

/// Some vector of the span has nonempty support inside `set`.
pub fn brute_is_relation(span: &HashSet<Vec<u32>>, set: &[usize]) -> bool {
    span.iter().any(|v| {
        let s = support(v);
        !s.is_empty() && s.iter().all(|i| set.contains(i))
    })
}

/// Columns `i` for which the span holds a vector supported on `{i}` alone.
pub fn brute_frozen(span: &HashSet<Vec<u32>>, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| span.iter().any(|v| support(v) == [i])).collect()
}

pub fn brute_is_proper(span: &HashSet<Vec<u32>>, frozen: &[usize], set: &[usize]) -> bool {
    let rest: Vec<usize> = set.iter().copied().filter(|i| !frozen.contains(i)).collect();
    !rest.is_empty() && brute_is_relation(span, &rest)
}

/// All `ell`-subsets of `0..n`.
pub fn subsets(n: usize, ell: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, ell, &mut Vec::new(), &mut out);
    out
}

pub fn brute_count_proper(m: &SparseMatrix, ell: usize) -> u64 {
    let sp = span(m);
    let frozen = brute_frozen(&sp, m.n_cols());
    subsets(m.n_cols(), ell).iter().filter(|s| brute_is_proper(&sp, &frozen, s)).count() as u64
}

/// `A v` over the matrix field.
pub fn apply(m: &SparseMatrix, v: &[u32]) -> Vec<u32> {
    let q = u64::from(m.field().modulus());
    let mut out = vec![0u64; m.n_rows()];
    for (i, j, x) in m.entries() {
        out[i] = (out[i] + u64::from(x) * u64::from(v[j])) % q;
    }
    out.into_iter().map(|x| x as u32).collect()
}

/// Maximum of `f` on `[0, 1]`: a fine grid followed by a ternary search
/// around the best node.
pub fn maximize_on_unit(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let steps = 200_000;
    let (mut best_a, mut best) = (0.0, f(0.0));
    for i in 1..=steps {
        let a = i as f64 / steps as f64;
        let v = f(a);
        if v > best {
            best = v;
            best_a = a;
        }
    }
    let (mut lo, mut hi) = ((best_a - 1.0 / steps as f64).max(0.0), (best_a + 1.0 / steps as f64).min(1.0));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let a = 0.5 * (lo + hi);
    if f(a) > best { (a, f(a)) } else { (best_a, best) }
}

/// Rank fraction for Poisson(`delta`) degrees on both sides, from the
/// closed form `2 - max_a { exp(-D e^{D(a-1)}) + (1 + (1-a) D) e^{D(a-1)} }`.
pub fn poisson_pair_rank(delta: f64) -> f64 {
    let f = |a: f64| {
        let e = (delta * (a - 1.0)).exp();
        (-delta * e).exp() + (1.0 + (1.0 - a) * delta) * e
    };
    2.0 - maximize_on_unit(f).1
}

/// Potential of Poisson(`d`) variable degrees against checks of degree three,
/// written out: `exp(-d a^2) - (d/3)(1 - 3a^2 + 2a^3)`.
pub fn xorsat3_potential(d: f64, a: f64) -> f64 {
    (-d * a * a).exp() - d / 3.0 * (1.0 - 3.0 * a * a + 2.0 * a * a * a)
}

/// 3-check threshold by bisection on `max potential > potential(0)`.
pub fn xorsat3_threshold() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let (_, best) = maximize_on_unit(|a| xorsat3_potential(mid, a));
        if best > xorsat3_potential(mid, 0.0) + 1e-12 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
