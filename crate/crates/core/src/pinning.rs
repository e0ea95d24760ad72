//! Experiments on pinned matrices: how many proper relations survive random
//! pinning, how the frozen set grows pin by pin, and how far the uniform
//! kernel element is from pairwise independence.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{count_proper_relations, pin, rank_of_rows, RelationStructure, RowSpace, SparseMatrix};

/// Cap on enumerated subsets when counting relations.
pub const RELATION_SUBSET_CAP: u64 = 1_000_000;

/// Default number of resampled continuations per growth step.
pub const DEFAULT_CONTINUATIONS: usize = 32;

/// `ceil(4 ell^3 / delta^4) + 1`, a pinning horizon large enough for the
/// freeness guarantee.
pub fn default_horizon(delta: f64, ell: usize) -> usize {
    (4.0 * (ell as f64).powi(3) / delta.powi(4)).ceil() as usize + 1
}

/// Draws a pin count uniformly from `1..=horizon`, or zero when the horizon is zero.
pub fn draw_pin_count<R: Rng + ?Sized>(horizon: usize, rng: &mut R) -> usize {
    if horizon == 0 { 0 } else { rng.random_range(1..=horizon) }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreenessReport {
    pub trials: usize,
    pub theta_draws: Vec<usize>,
    pub proper_relation_counts: Vec<u64>,
    pub fraction_free: f64,
    pub delta: f64,
    pub ell: usize,
    pub horizon: usize,
    /// `delta * n^ell`; a trial is free when its count is below this.
    pub threshold: f64,
}

impl FreenessReport {
    /// Binomial standard error of `fraction_free`.
    pub fn std_error(&self) -> f64 {
        let p = self.fraction_free;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Runs the freeness experiment on matrices drawn by `source`.
pub fn freeness_with<R, F>(
    mut source: F,
    delta: f64,
    ell: usize,
    horizon: usize,
    trials: usize,
    rng: &mut R,
) -> Result<FreenessReport>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<SparseMatrix>,
{
    if !(delta > 0.0 && delta < 1.0) || ell == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "need 0 < delta < 1, ell >= 1 and at least one trial".into(),
        ));
    }
    let mut theta_draws = Vec::with_capacity(trials);
    let mut counts = Vec::with_capacity(trials);
    let mut threshold = 0.0;
    let mut free = 0;
    for _ in 0..trials {
        let a = source(rng)?;
        let theta = draw_pin_count(horizon, rng);
        let pinned = pin(&a, theta, rng)?;
        let count = count_proper_relations(&pinned, ell, RELATION_SUBSET_CAP)?;
        threshold = delta * (a.n_cols() as f64).powi(ell as i32);
        if (count as f64) < threshold {
            free += 1;
        }
        theta_draws.push(theta);
        counts.push(count);
    }
    Ok(FreenessReport {
        trials,
        theta_draws,
        proper_relation_counts: counts,
        fraction_free: f64::from(free) / trials as f64,
        delta,
        ell,
        horizon,
        threshold,
    })
}

/// Freeness experiment on simple ensemble matrices with uniform nonzero entries.
#[allow(clippy::too_many_arguments)]
pub fn freeness_experiment<R: Rng + ?Sized>(
    ens: &crate::formula::EnsembleSpec,
    n: usize,
    field: crate::linalg::FieldSpec,
    delta: f64,
    ell: usize,
    horizon: usize,
    trials: usize,
    rng: &mut R,
) -> Result<FreenessReport> {
    use crate::sampler::{sample_ensemble_matrix, EntryMap};
    freeness_with(
        |r: &mut R| sample_ensemble_matrix(ens, n, field, EntryMap::UniformNonzero, r),
        delta,
        ell,
        horizon,
        trials,
        rng,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthStep {
    pub t: usize,
    pub frozen: usize,
    /// Estimated expected frozen gain over the next `ell` pins, per column.
    pub delta: Option<f64>,
    pub delta_std_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GrowthOptions {
    pub ell: usize,
    pub steps: usize,
    /// Resampled continuations per step; zero skips the estimate.
    pub continuations: usize,
    /// Pin only inside these columns.
    pub subset: Option<Vec<usize>>,
}

impl GrowthOptions {
    pub fn new(ell: usize, steps: usize) -> Self {
        GrowthOptions { ell, steps, continuations: DEFAULT_CONTINUATIONS, subset: None }
    }
}

/// Pins one uniform column at a time, recording the frozen count after each
/// pin (`t = 0` is the unpinned matrix).
pub fn frozen_growth<R: Rng + ?Sized>(m: &SparseMatrix, opts: &GrowthOptions, rng: &mut R) -> Result<Vec<GrowthStep>> {
    let pool: Vec<usize> = match &opts.subset {
        Some(s) if s.iter().any(|&c| c >= m.n_cols()) => {
            return Err(Error::InvalidArgument("pinning subset out of range".into()));
        }
        Some(s) if !s.is_empty() => s.clone(),
        Some(_) => return Err(Error::InvalidArgument("pinning subset is empty".into())),
        None => (0..m.n_cols()).collect(),
    };
    if pool.is_empty() {
        return Err(Error::InvalidArgument("cannot pin a matrix without columns".into()));
    }
    let n = m.n_cols() as f64;
    let mut space = RowSpace::from_matrix(m);
    let mut out = Vec::with_capacity(opts.steps + 1);
    for t in 0..=opts.steps {
        let frozen = space.frozen_count();
        let (delta, delta_std_error) = if opts.continuations > 0 && t < opts.steps {
            let gains: Vec<f64> = (0..opts.continuations)
                .map(|_| {
                    let mut s = space.clone();
                    for _ in 0..opts.ell {
                        s.pin(pool[rng.random_range(0..pool.len())]);
                    }
                    (s.frozen_count() - frozen) as f64 / n
                })
                .collect();
            let (mean, se) = mean_and_std_error(&gains);
            (Some(mean), Some(se))
        } else {
            (None, None)
        };
        out.push(GrowthStep { t, frozen, delta, delta_std_error });
        if t < opts.steps {
            space.pin(pool[rng.random_range(0..pool.len())]);
        }
    }
    Ok(out)
}

/// Sample mean and `sd / sqrt(len)`; the error is zero for fewer than two values.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let len = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / len;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0);
    (mean, (var / len).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    /// Sum over column pairs and value pairs of `|joint - product|`, over `n^2`.
    pub pair_tv_sum: f64,
    /// Column pairs examined.
    pub samples: usize,
    pub q: u32,
    pub theta: usize,
    pub nullity: usize,
    /// Pairs forming a proper relation.
    pub proper_pairs: usize,
    /// Pairs that are not a proper relation yet show a discrepancy.
    pub violations: usize,
}

/// Probability that a uniform kernel element takes the given values on a set
/// of columns, as `q^-e` (or zero when inconsistent): returns `Some(e)` or `None`.
fn kernel_mass(s: &RelationStructure, nullity: usize, q: u32, cols: &[usize], values: &[u32]) -> Option<usize> {
    let coeff: Vec<Vec<(usize, u32)>> = cols.iter().map(|&c| s.coordinates(c).to_vec()).collect();
    let augmented: Vec<Vec<(usize, u32)>> = coeff
        .iter()
        .zip(values)
        .map(|(row, &v)| {
            let mut r = row.clone();
            if v != 0 {
                r.push((nullity, v));
            }
            r
        })
        .collect();
    let r = rank_of_rows(&coeff, nullity, q);
    (rank_of_rows(&augmented, nullity + 1, q) == r).then_some(r)
}

/// Pairwise dependence of the coordinates of a uniform kernel element of `m`,
/// computed exactly from ranks of kernel coordinates.
pub fn pairwise_dependence(m: &SparseMatrix) -> Result<IndependenceReport> {
    let q = match m.field() {
        crate::linalg::FieldSpec::Prime(q) => q,
        _ => return Err(Error::UnsupportedField("independence needs a finite field".into())),
    };
    let s = RelationStructure::new(m);
    let nullity = s.nullity();
    let n = m.n_cols();
    let qf = f64::from(q);
    let marginals: Vec<Vec<Option<usize>>> = (0..n)
        .map(|i| (0..q).map(|w| kernel_mass(&s, nullity, q, &[i], &[w])).collect())
        .collect();
    let mut tv = 0.0;
    let mut samples = 0;
    let mut proper_pairs = 0;
    let mut violations = 0;
    for i in 0..n {
        for j in i + 1..n {
            let mut pair_tv = 0.0;
            let mut exact = true;
            for w in 0..q {
                for w2 in 0..q {
                    let joint = kernel_mass(&s, nullity, q, &[i, j], &[w, w2]);
                    let product = marginals[i][w as usize].zip(marginals[j][w2 as usize]).map(|(a, b)| a + b);
                    if joint != product {
                        exact = false;
                        let p = |e: Option<usize>| e.map_or(0.0, |e| qf.powi(-(e as i32)));
                        pair_tv += (p(joint) - p(product)).abs();
                    }
                }
            }
            let proper = s.is_proper(&[i, j]);
            proper_pairs += usize::from(proper);
            violations += usize::from(!proper && !exact);
            tv += pair_tv;
            samples += 1;
        }
    }
    Ok(IndependenceReport {
        pair_tv_sum: if n == 0 { 0.0 } else { tv / (n as f64).powi(2) },
        samples,
        q,
        theta: 0,
        nullity,
        proper_pairs,
        violations,
    })
}

/// Pins `theta ~ U[1..=horizon]` columns of `m`, then measures
/// [`pairwise_dependence`].
pub fn independence_experiment<R: Rng + ?Sized>(
    m: &SparseMatrix,
    horizon: usize,
    rng: &mut R,
) -> Result<IndependenceReport> {
    if !m.field().is_finite() {
        return Err(Error::UnsupportedField("independence needs a finite field".into()));
    }
    let theta = draw_pin_count(horizon, rng);
    let pinned = pin(m, theta, rng)?;
    Ok(IndependenceReport { theta, ..pairwise_dependence(&pinned)? })
}
