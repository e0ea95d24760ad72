//! Random Tanner graphs with prescribed degree laws and the matrices they carry.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::dist::gcd;
use crate::error::{Error, Result};
use crate::formula::EnsembleSpec;
use crate::linalg::{FieldSpec, SparseMatrix};

/// Resampling cap for simple matchings.
pub const SIMPLE_RESAMPLE_CAP: usize = 10_000;

/// Attempts allowed per `sqrt(n)` when conditioning degree sums.
pub const REJECTION_CAP_PER_ROOT_N: f64 = 1e6;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Degree sequences with equal sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    pub var_degrees: Vec<u32>,
    pub check_degrees: Vec<u32>,
    /// Attempts rejected before the accepted one.
    pub rejections: u64,
}

impl DegreeSequence {
    pub fn n(&self) -> usize {
        self.var_degrees.len()
    }

    pub fn m(&self) -> usize {
        self.check_degrees.len()
    }
}

/// Whether equal degree sums are reachable for `n` variables.
pub fn sums_can_match(ens: &EnsembleSpec, n: usize) -> Result<bool> {
    let gk = ens.check().gcd_support()?;
    let gd = ens.var().gcd_differences();
    let base = u64::from(ens.var().min_degree()) * n as u64;
    Ok(base % u64::from(gcd(gd, gk)) == 0)
}

fn expand(counts: &[u64]) -> Vec<u32> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat_n(j as u32, c as usize))
        .collect()
}

fn weighted_sum(counts: &[u64]) -> u64 {
    counts.iter().enumerate().map(|(j, &c)| j as u64 * c).sum()
}

/// Draws `m ~ Po(dn/k)` and i.i.d. degrees on both sides, rejecting until the
/// sums agree.
pub fn sample_degree_sequence<R: Rng + ?Sized>(
    ens: &EnsembleSpec,
    n: usize,
    rng: &mut R,
) -> Result<DegreeSequence> {
    if n == 0 {
        return Err(Error::Precondition("need at least one variable".into()));
    }
    if !sums_can_match(ens, n)? {
        return Err(Error::Precondition(format!(
            "degree sums can never agree for n = {n} under {ens}"
        )));
    }
    let rate = ens.d() * n as f64 / ens.k();
    let poisson = Poisson::new(rate).map_err(|e| Error::InvalidArgument(format!("check count rate: {e}")))?;
    let cap = (REJECTION_CAP_PER_ROOT_N * (n as f64).sqrt()).ceil() as u64;
    for attempt in 0..cap {
        let m = poisson.sample(rng) as u64;
        let dc = ens.var().sample_counts(n as u64, rng);
        let kc = ens.check().sample_counts(m, rng);
        if weighted_sum(&dc) == weighted_sum(&kc) {
            let mut var_degrees = expand(&dc);
            let mut check_degrees = expand(&kc);
            var_degrees.shuffle(rng);
            check_degrees.shuffle(rng);
            return Ok(DegreeSequence { var_degrees, check_degrees, rejections: attempt });
        }
    }
    Err(Error::SamplingFailure(format!(
        "no degree sequence with equal sums in {cap} attempts (n = {n}, {ens})"
    )))
}

/// Bipartite graph between checks (rows) and variables (columns).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TannerGraph {
    pub n_vars: usize,
    pub n_checks: usize,
    /// `(check, variable)` pairs, grouped by check.
    pub edges: Vec<(usize, usize)>,
    pub var_degrees: Vec<u32>,
    pub check_degrees: Vec<u32>,
}

impl TannerGraph {
    /// Builds a graph from an edge list, deriving the degrees.
    pub fn from_edges(n_vars: usize, n_checks: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut var_degrees = vec![0u32; n_vars];
        let mut check_degrees = vec![0u32; n_checks];
        for &(a, x) in &edges {
            if a >= n_checks || x >= n_vars {
                return Err(Error::InvalidArgument(format!("edge ({a}, {x}) out of range")));
            }
            check_degrees[a] += 1;
            var_degrees[x] += 1;
        }
        Ok(TannerGraph { n_vars, n_checks, edges, var_degrees, check_degrees })
    }

    /// The support graph of a matrix.
    pub fn from_matrix(m: &SparseMatrix) -> Self {
        let edges = m.entries().map(|(i, j, _)| (i, j)).collect();
        Self::from_edges(m.n_cols(), m.n_rows(), edges).expect("matrix indices are in range")
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = self.edges.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Variables adjacent to each check, with multiplicity.
    pub fn check_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_checks];
        for &(a, x) in &self.edges {
            out[a].push(x);
        }
        out
    }

    /// Checks adjacent to each variable, with multiplicity.
    pub fn var_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vars];
        for &(a, x) in &self.edges {
            out[x].push(a);
        }
        out
    }
}

fn has_repeat(edges: &[(usize, usize)], stamp: &mut [usize], k_seq: &[u32]) -> bool {
    // edges are grouped by check in order; stamp[x] holds the last check seen at x
    stamp.iter_mut().for_each(|s| *s = usize::MAX);
    let mut pos = 0;
    for (a, &k) in k_seq.iter().enumerate() {
        for &(_, x) in &edges[pos..pos + k as usize] {
            if stamp[x] == a {
                return true;
            }
            stamp[x] = a;
        }
        pos += k as usize;
    }
    false
}

/// Configuration model: a uniform matching of variable clones to check clones,
/// redrawn until simple when `simple` is set.
pub fn sample_tanner<R: Rng + ?Sized>(
    d_seq: &[u32],
    k_seq: &[u32],
    rng: &mut R,
    simple: bool,
) -> Result<TannerGraph> {
    let total_d: u64 = d_seq.iter().map(|&d| u64::from(d)).sum();
    let total_k: u64 = k_seq.iter().map(|&k| u64::from(k)).sum();
    if total_d != total_k {
        return Err(Error::Precondition(format!(
            "degree sums differ: {total_d} variable clones, {total_k} check clones"
        )));
    }
    let mut clones: Vec<usize> = d_seq
        .iter()
        .enumerate()
        .flat_map(|(x, &d)| std::iter::repeat_n(x, d as usize))
        .collect();
    let owners: Vec<usize> = k_seq
        .iter()
        .enumerate()
        .flat_map(|(a, &k)| std::iter::repeat_n(a, k as usize))
        .collect();
    let mut stamp = vec![usize::MAX; d_seq.len()];
    for _ in 0..SIMPLE_RESAMPLE_CAP {
        clones.shuffle(rng);
        let edges: Vec<(usize, usize)> = owners.iter().copied().zip(clones.iter().copied()).collect();
        if !simple || !has_repeat(&edges, &mut stamp, k_seq) {
            return Ok(TannerGraph {
                n_vars: d_seq.len(),
                n_checks: k_seq.len(),
                edges,
                var_degrees: d_seq.to_vec(),
                check_degrees: k_seq.to_vec(),
            });
        }
    }
    Err(Error::SamplingFailure(format!(
        "no simple matching in {SIMPLE_RESAMPLE_CAP} resamples ({} variables, {} checks)",
        d_seq.len(),
        k_seq.len()
    )))
}

/// How matrix entries are attached to the edges of a Tanner graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntryMap {
    AllOnes,
    /// Independent uniform nonzero values.
    UniformNonzero,
    /// Every row and column draws a uniform label; an edge's value is a fixed
    /// hash, keyed by the seed, of its two labels.
    Seeded2D(u64),
}

impl EntryMap {
    /// Nonzero field value for labels `(row, col)` under this seed.
    pub fn hashed_value(seed: u64, row_label: u64, col_label: u64, modulus: u32) -> u32 {
        let h = mix64(seed ^ mix64(row_label ^ mix64(col_label)));
        1 + (h % u64::from(modulus - 1)) as u32
    }
}

impl fmt::Display for EntryMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryMap::AllOnes => f.write_str("ones"),
            EntryMap::UniformNonzero => f.write_str("uniform"),
            EntryMap::Seeded2D(s) => write!(f, "chi:{s}"),
        }
    }
}

impl FromStr for EntryMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ones" => Ok(EntryMap::AllOnes),
            "uniform" => Ok(EntryMap::UniformNonzero),
            other => other
                .strip_prefix("chi:")
                .and_then(|seed| seed.trim().parse().ok())
                .map(EntryMap::Seeded2D)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown entry map {other:?}"))),
        }
    }
}

/// One nonzero per Tanner edge; values at repeated positions are summed.
pub fn sample_matrix<R: Rng + ?Sized>(
    g: &TannerGraph,
    field: FieldSpec,
    entries: EntryMap,
    rng: &mut R,
) -> Result<SparseMatrix> {
    let p = field.modulus();
    let values: Vec<u64> = match entries {
        EntryMap::AllOnes => vec![1; g.n_edges()],
        EntryMap::UniformNonzero => (0..g.n_edges()).map(|_| u64::from(rng.random_range(1..p))).collect(),
        EntryMap::Seeded2D(seed) => {
            let rows: Vec<u64> = (0..g.n_checks).map(|_| rng.random()).collect();
            let cols: Vec<u64> = (0..g.n_vars).map(|_| rng.random()).collect();
            g.edges
                .iter()
                .map(|&(a, x)| u64::from(EntryMap::hashed_value(seed, rows[a], cols[x], p)))
                .collect()
        }
    };
    let list = g.edges.iter().zip(values).map(|(&(a, x), v)| (a, x, v));
    SparseMatrix::summing(g.n_checks, g.n_vars, field, list)
}

/// Degree sequence plus configuration model.
pub fn sample_ensemble_graph<R: Rng + ?Sized>(
    ens: &EnsembleSpec,
    n: usize,
    rng: &mut R,
    simple: bool,
) -> Result<TannerGraph> {
    let seq = sample_degree_sequence(ens, n, rng)?;
    sample_tanner(&seq.var_degrees, &seq.check_degrees, rng, simple)
}

/// A simple random Tanner graph from the ensemble with entries attached.
pub fn sample_ensemble_matrix<R: Rng + ?Sized>(
    ens: &EnsembleSpec,
    n: usize,
    field: FieldSpec,
    entries: EntryMap,
    rng: &mut R,
) -> Result<SparseMatrix> {
    let g = sample_ensemble_graph(ens, n, rng, true)?;
    sample_matrix(&g, field, entries, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ens(s: &str) -> EnsembleSpec {
        s.parse().unwrap()
    }

    #[test]
    fn point_masses_force_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_degree_sequence(&ens("point:2;point:4"), 100, &mut rng).unwrap();
        assert_eq!(s.var_degrees.iter().sum::<u32>(), 200);
        assert_eq!(s.m(), 50);
        assert_eq!(s.check_degrees.iter().sum::<u32>(), 200);
    }

    #[test]
    fn divisibility_on_acceptance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let s = sample_degree_sequence(&ens("po:2;point:3"), 999, &mut rng).unwrap();
            assert_eq!(s.var_degrees.iter().sum::<u32>() % 3, 0);
            assert_eq!(s.m() * 3, s.var_degrees.iter().sum::<u32>() as usize);
        }
    }

    #[test]
    fn infeasible_sums_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = ens("point:1;point:3");
        assert!(matches!(sample_degree_sequence(&e, 10, &mut rng), Err(Error::Precondition(_))));
        assert!(sample_degree_sequence(&e, 9, &mut rng).is_ok());
        assert!(sample_ensemble_matrix(&e, 10, FieldSpec::Prime(2), EntryMap::AllOnes, &mut rng).is_err());
    }

    #[test]
    fn small_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = sample_tanner(&[1], &[1], &mut rng, true).unwrap();
        assert_eq!(g.edges, vec![(0, 0)]);
        let g = sample_tanner(&[2, 2, 2], &[3, 3], &mut rng, true).unwrap();
        assert!(g.is_simple());
        let rebuilt = TannerGraph::from_edges(3, 2, g.edges.clone()).unwrap();
        assert_eq!(rebuilt.var_degrees, vec![2, 2, 2]);
        assert_eq!(rebuilt.check_degrees, vec![3, 3]);
        assert!(sample_tanner(&[2], &[1], &mut rng, true).is_err());
        // A single check of degree 2 on one variable of degree 2 is never simple.
        assert!(matches!(sample_tanner(&[2], &[2], &mut rng, true), Err(Error::SamplingFailure(_))));
        assert!(!sample_tanner(&[2], &[2], &mut rng, false).unwrap().is_simple());
    }

    #[test]
    fn matrices_follow_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = sample_ensemble_graph(&ens("po:1.5;point:3"), 300, &mut rng, true).unwrap();
        let ones = sample_matrix(&g, FieldSpec::Prime(2), EntryMap::AllOnes, &mut rng).unwrap();
        let unif = sample_matrix(&g, FieldSpec::Prime(2), EntryMap::UniformNonzero, &mut rng).unwrap();
        assert_eq!(ones, unif);
        assert!((0..ones.n_rows()).all(|i| ones.row_weight(i) == 3));
        let cw = ones.col_weights();
        for (x, &d) in g.var_degrees.iter().enumerate() {
            assert_eq!(cw[x], d as usize);
        }
        let chi = sample_matrix(&g, FieldSpec::Prime(7), EntryMap::Seeded2D(11), &mut rng).unwrap();
        assert_eq!(chi.nnz(), g.n_edges());
        assert!(chi.entries().all(|(_, _, v)| (1..7).contains(&v)));
    }

    #[test]
    fn uniform_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        let g = TannerGraph::from_edges(n, n, edges).unwrap();
        let m = sample_matrix(&g, FieldSpec::Prime(5), EntryMap::UniformNonzero, &mut rng).unwrap();
        let mut counts = [0f64; 5];
        for (_, _, v) in m.entries() {
            counts[v as usize] += 1.0;
        }
        let expect = n as f64 / 4.0;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in &counts[1..] {
            assert!((c - expect).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let e = ens("po:2;point:3");
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            sample_ensemble_matrix(&e, 200, FieldSpec::Prime(3), EntryMap::Seeded2D(1), &mut rng).unwrap()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn entry_map_grammar() {
        for m in [EntryMap::AllOnes, EntryMap::UniformNonzero, EntryMap::Seeded2D(42)] {
            assert_eq!(m.to_string().parse::<EntryMap>().unwrap(), m);
        }
        assert!("chi:x".parse::<EntryMap>().is_err());
    }
}
