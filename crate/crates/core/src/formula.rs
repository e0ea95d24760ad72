//! The variational rank formula and the 2-core quantities derived from it.
//!
//! With `D`, `K` the PGFs of the variable and check degrees and `d`, `k`
//! their means, the potential is
//!
//! ```text
//! Phi(a) = D(1 - K'(a)/k) - (d/k) (1 - K(a) - (1 - a) K'(a))
//! ```
//!
//! and the limiting rank fraction is `1 - max_{a in [0,1]} Phi(a)`. Its
//! derivative factors as `Phi'(a) = (d/k) K''(a) phi(a)` with the core residual
//! `phi(a) = 1 - a - D'(1 - K'(a)/k) / d = g(a) - a`. The largest zero of
//! `Phi'` is the core fixed point `rho`, reached by iterating `g` from 1.
//!
//! The core variable fraction is
//! `1 - D(1 - K'(rho)/k) - (K'(rho)/k) D'(1 - K'(rho)/k)`: variables keeping at
//! least two surviving checks. Writing the last factor as `D'(K'(rho)/k)`
//! instead is a known misprint of this expression and is not used.

use std::fmt;
use std::str::FromStr;

use crate::dist::{DegreeDistribution, Family};
use crate::error::{Error, Result};

/// Points in the global grid scan of the potential (plus one).
pub const GRID_POINTS: usize = 10_000;

/// Margin by which the global maximum must beat `max{Phi(0), Phi(rho)}`
/// before the 2-core bound is declared not tight.
pub const NOT_TIGHT_MARGIN: f64 = 1e-7;

const TIE_RESOLUTION: f64 = 1e-12;
const ALPHA_TOLERANCE: f64 = 1e-10;
const FIXED_POINT_STEP: f64 = 1e-13;
const FIXED_POINT_CAP: usize = 100_000;

/// Variable and check degree laws of the random matrix ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    var: DegreeDistribution,
    check: DegreeDistribution,
}

impl EnsembleSpec {
    pub fn new(var: DegreeDistribution, check: DegreeDistribution) -> Result<Self> {
        if var.mean() <= 0.0 || check.mean() <= 0.0 {
            return Err(Error::InvalidSpec(
                "both degree laws need a positive mean".into(),
            ));
        }
        Ok(Self { var, check })
    }

    pub fn var(&self) -> &DegreeDistribution {
        &self.var
    }

    pub fn check(&self) -> &DegreeDistribution {
        &self.check
    }

    /// Mean variable degree.
    pub fn d(&self) -> f64 {
        self.var.mean()
    }

    /// Mean check degree.
    pub fn k(&self) -> f64 {
        self.check.mean()
    }

    /// Both laws conditioned on degree at least one.
    pub fn strip_zero_degrees(&self) -> Result<Self> {
        Self::new(self.var.strip_zero()?, self.check.strip_zero()?)
    }

    fn kprime_ratio(&self, alpha: f64) -> f64 {
        (self.check.pgf_at(alpha, 1) / self.k()).clamp(0.0, 1.0)
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.var, self.check)
    }
}

/// Parses `VAR;CHECK`, e.g. `po:2;point:3`.
impl FromStr for EnsembleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (v, c) = s.split_once(';').ok_or_else(|| {
            Error::InvalidSpec(format!("ensemble must be VAR;CHECK, got {s:?}"))
        })?;
        Self::new(v.parse()?, c.parse()?)
    }
}

/// The potential `Phi(alpha)`.
pub fn potential(ens: &EnsembleSpec, alpha: f64) -> f64 {
    let k = ens.k();
    let kp = ens.check.pgf_at(alpha, 1);
    let kv = ens.check.pgf_at(alpha, 0);
    ens.var.pgf_at(ens.kprime_ratio(alpha).mul_add(-1.0, 1.0), 0)
        - ens.d() / k * (1.0 - kv - (1.0 - alpha) * kp)
}

/// The core residual `phi(alpha) = 1 - alpha - D'(1 - K'(alpha)/k) / d`.
pub fn core_residual(ens: &EnsembleSpec, alpha: f64) -> f64 {
    core_map(ens, alpha) - alpha
}

/// The stripping map `g(x) = 1 - D'(1 - K'(x)/k) / d`; nondecreasing on `[0, 1]`.
pub fn core_map(ens: &EnsembleSpec, x: f64) -> f64 {
    1.0 - ens.var.pgf_at(1.0 - ens.kprime_ratio(x), 1) / ens.d()
}

/// `phi'(alpha) = -1 + D''(1 - K'(alpha)/k) K''(alpha) / (d k)`.
pub fn core_residual_slope(ens: &EnsembleSpec, alpha: f64) -> f64 {
    -1.0 + ens.var.pgf_at(1.0 - ens.kprime_ratio(alpha), 2) * ens.check.pgf_at(alpha, 2)
        / (ens.d() * ens.k())
}

/// Analytic derivative `Phi'(alpha) = (d/k) K''(alpha) phi(alpha)`.
pub fn potential_derivative(ens: &EnsembleSpec, alpha: f64) -> f64 {
    ens.d() / ens.k() * ens.check.pgf_at(alpha, 2) * core_residual(ens, alpha)
}

/// Second derivative of the potential,
/// `Phi'' = (d/k) (K''' phi + K'' phi')`.
pub fn potential_second_derivative(ens: &EnsembleSpec, alpha: f64) -> f64 {
    ens.d() / ens.k()
        * (ens.check.pgf_at(alpha, 3) * core_residual(ens, alpha)
            + ens.check.pgf_at(alpha, 2) * core_residual_slope(ens, alpha))
}

/// Largest `x` in `[0, 1]` with `Phi'(x) = 0`.
///
/// Iterates the stripping map from 1; the iterates decrease monotonically to
/// the largest fixed point of `g`. A bracketing bisection on `phi` polishes the
/// limit when the iteration creeps (tangent or nearly tangent fixed points).
pub fn core_fixed_point(ens: &EnsembleSpec) -> Result<f64> {
    if matches!(ens.check.family(), Family::PointMass(2)) && ens.var.max_degree().is_some_and(|m| m <= 2) {
        // phi is affine with slope P[d = 2]/d - 1 < 0 and phi(0) = 0.
        return Ok(0.0);
    }

    let mut x = 1.0f64;
    let mut converged = false;
    for _ in 0..FIXED_POINT_CAP {
        let next = core_map(ens, x).clamp(0.0, 1.0);
        let step = (x - next).abs();
        x = next.min(x);
        if step < FIXED_POINT_STEP {
            converged = true;
            break;
        }
    }
    if x < 1e-12 && core_residual(ens, 0.0).abs() < 1e-12 {
        return Ok(0.0);
    }

    // Step down until phi turns nonnegative; phi(0) >= 0 always holds.
    let mut lo = None;
    let mut s = 1e-12;
    while s < 2.0 {
        let y = (x - s).max(0.0);
        if core_residual(ens, y) >= 0.0 {
            lo = Some(y);
            break;
        }
        if y == 0.0 {
            break;
        }
        s *= 2.0;
    }
    if core_residual(ens, x) >= 0.0 {
        return Ok(x);
    }
    match lo {
        Some(mut a) => {
            let mut b = x;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if core_residual(ens, mid) >= 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let r = if core_residual(ens, b).abs() < core_residual(ens, a).abs() { b } else { a };
            Ok(r)
        }
        None if converged || core_residual(ens, x).abs() < 1e-10 => Ok(x),
        None => Err(Error::NumericFailure {
            what: "core fixed point iteration",
            last: x,
        }),
    }
}

/// Global maximizer of the potential on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialMax {
    pub alpha: f64,
    pub value: f64,
}

/// Grid scan over [`GRID_POINTS`] + 1 points, golden-section refinement of every
/// grid-local maximum, and the smallest maximizer among ties.
pub fn maximize_potential(ens: &EnsembleSpec) -> PotentialMax {
    let f = |a: f64| potential(ens, a);
    let g = GRID_POINTS;
    let vals: Vec<f64> = (0..=g).map(|i| f(i as f64 / g as f64)).collect();
    let grid_max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut best = PotentialMax { alpha: 0.0, value: vals[0] };
    let mut consider = |alpha: f64, value: f64| {
        if value > best.value + TIE_RESOLUTION
            || ((value - best.value).abs() <= TIE_RESOLUTION && alpha < best.alpha)
        {
            best = PotentialMax { alpha, value };
        }
    };
    for i in 0..=g {
        let left = if i == 0 { f64::NEG_INFINITY } else { vals[i - 1] };
        let right = if i == g { f64::NEG_INFINITY } else { vals[i + 1] };
        if vals[i] < left || vals[i] < right {
            continue;
        }
        consider(i as f64 / g as f64, vals[i]);
        // Only refine peaks that could compete for the global maximum.
        if vals[i] < grid_max - 1e-3 {
            continue;
        }
        let a = i.saturating_sub(1) as f64 / g as f64;
        let b = (i + 1).min(g) as f64 / g as f64;
        let (x, v) = golden_section_max(f, a, b, ALPHA_TOLERANCE);
        consider(x, v);
    }
    best
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |acc, p| if p.1 > acc.1 { p } else { acc })
}

/// What the tightness theorem and the numerics say about the 2-core bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tightness {
    /// Both laws are constant or (truncated) Poisson.
    TightByTheorem,
    /// The global maximum beats `max{Phi(0), Phi(rho)}` numerically.
    BoundNotTight,
    /// Theorem silent, numerics consistent with a tight bound.
    Undetermined,
}

impl fmt::Display for Tightness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tightness::TightByTheorem => "tight-by-theorem",
            Tightness::BoundNotTight => "not-tight",
            Tightness::Undetermined => "undetermined",
        })
    }
}

impl FromStr for Tightness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight-by-theorem" => Ok(Tightness::TightByTheorem),
            "not-tight" => Ok(Tightness::BoundNotTight),
            "undetermined" => Ok(Tightness::Undetermined),
            _ => Err(Error::InvalidArgument(format!("unknown tightness {s:?}"))),
        }
    }
}

fn covered_by_tightness_theorem(dist: &DegreeDistribution) -> bool {
    dist.is_degenerate() || matches!(dist.family(), Family::TruncatedPoisson { .. })
}

/// The exception in the tightness analysis: `P[d = 1] = 0` and
/// `2 (E k - 1) P[d = 2] > E d`, where `phi'(rho) >= 0` at `rho = 1`.
pub fn unstable_core_exception(ens: &EnsembleSpec) -> bool {
    ens.var.pmf(1) == 0.0 && 2.0 * (ens.k() - 1.0) * ens.var.pmf(2) > ens.d()
}

pub fn tightness_certificate(ens: &EnsembleSpec) -> Result<Tightness> {
    let rho = core_fixed_point(ens)?;
    Ok(classify(ens, rho, &maximize_potential(ens)))
}

fn classify(ens: &EnsembleSpec, rho: f64, max: &PotentialMax) -> Tightness {
    if covered_by_tightness_theorem(&ens.var) && covered_by_tightness_theorem(&ens.check) {
        return Tightness::TightByTheorem;
    }
    let bound = potential(ens, 0.0).max(potential(ens, rho));
    if max.value > bound + NOT_TIGHT_MARGIN {
        Tightness::BoundNotTight
    } else {
        Tightness::Undetermined
    }
}

/// Limiting 2-core sizes `(n*/n, m*/n)` at the core fixed point `rho`.
pub fn core_fractions(ens: &EnsembleSpec, rho: f64) -> (f64, f64) {
    let beta = ens.kprime_ratio(rho);
    let vars = 1.0 - ens.var.pgf_at(1.0 - beta, 0) - beta * ens.var.pgf_at(1.0 - beta, 1);
    let checks = ens.d() / ens.k() * ens.check.pgf_at(rho, 0);
    (vars.max(0.0), checks)
}

/// Everything the formula predicts for one ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct RankPrediction {
    pub alpha_star: f64,
    pub phi_max: f64,
    pub rank_fraction: f64,
    pub rho: f64,
    pub phi_zero: f64,
    pub phi_rho: f64,
    pub core_var_fraction: f64,
    pub core_check_fraction: f64,
    pub two_core_bound: f64,
    pub tightness: Tightness,
    /// `phi'(rho)`; the core-size limit is proven when this is negative.
    pub core_slope: f64,
}

impl RankPrediction {
    /// False when the stability hypothesis `phi'(rho) < 0` of the core-size
    /// limit fails; the fractions are still the formula values.
    pub fn core_hypothesis_holds(&self) -> bool {
        self.core_slope < 0.0
    }

    pub const CSV_HEADER: &'static str = "alpha_star,phi_max,rank_fraction,rho,phi_zero,phi_rho,core_var_fraction,core_check_fraction,two_core_bound,tightness,core_slope,core_hypothesis";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.alpha_star,
            self.phi_max,
            self.rank_fraction,
            self.rho,
            self.phi_zero,
            self.phi_rho,
            self.core_var_fraction,
            self.core_check_fraction,
            self.two_core_bound,
            self.tightness,
            self.core_slope,
            if self.core_hypothesis_holds() { "holds" } else { "violated" }
        )
    }
}

pub fn rank_prediction(ens: &EnsembleSpec) -> Result<RankPrediction> {
    let rho = core_fixed_point(ens)?;
    let max = maximize_potential(ens);
    let phi_zero = potential(ens, 0.0);
    let phi_rho = potential(ens, rho);
    let (core_var_fraction, core_check_fraction) = core_fractions(ens, rho);
    Ok(RankPrediction {
        alpha_star: max.alpha,
        phi_max: max.value,
        rank_fraction: 1.0 - max.value,
        rho,
        phi_zero,
        phi_rho,
        core_var_fraction,
        core_check_fraction,
        two_core_bound: 1.0 - phi_zero.max(phi_rho),
        tightness: classify(ens, rho, &max),
        core_slope: core_residual_slope(ens, rho),
    })
}

/// `(alpha, Phi(alpha))` on `points` equispaced nodes of `[0, 1]`.
pub fn potential_curve(ens: &EnsembleSpec, points: usize) -> Vec<(f64, f64)> {
    let last = points.max(2) - 1;
    (0..=last)
        .map(|i| {
            let a = i as f64 / last as f64;
            (a, potential(ens, a))
        })
        .collect()
}

/// Bisection for the mean `d` at which `build(d)` stops having full row rank,
/// i.e. where `max Phi` first exceeds `Phi(0)`. `lo` must be full rank and
/// `hi` must not be.
pub fn full_row_rank_threshold(
    build: impl Fn(f64) -> Result<EnsembleSpec>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let full_rank = |d: f64| -> Result<bool> {
        let ens = build(d)?;
        Ok(maximize_potential(&ens).value <= potential(&ens, 0.0) + TIE_RESOLUTION)
    };
    if !full_rank(lo)? || full_rank(hi)? {
        return Err(Error::InvalidArgument(format!(
            "[{lo}, {hi}] does not bracket the full-rank threshold"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if full_rank(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
