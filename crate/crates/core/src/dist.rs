//! Degree distributions on the nonnegative integers.
//!
//! A [`DegreeDistribution`] carries its probability generating function (PGF)
//! and the first three derivatives, cached first and second moments, a dense
//! probability table used for sampling, and the support gcd. Four families are
//! supported: point masses, Poisson laws conditioned on being at least some
//! integer `min` (with `min = 0` giving the plain Poisson law), explicit
//! probability mass functions and PGF coefficient vectors.
//!
//! Spec strings (`point:3`, `po:>=2:mean=3.0`, `pmf:2=0.88,11=0.12`,
//! `pgf:[0,0,0.88,0,0,0,0,0,0,0,0,0.12]`) parse through [`FromStr`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Largest derivative order served by [`DegreeDistribution::pgf`].
pub const MAX_PGF_ORDER: u32 = 3;

/// Atoms lighter than this are ignored by [`DegreeDistribution::gcd_support`].
pub const GCD_ATOM_FLOOR: f64 = 1e-12;

const PMF_SUM_TOLERANCE: f64 = 1e-9;

/// How the rate of a truncated Poisson law is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PoissonRate {
    Lambda(f64),
    Mean(f64),
}

/// Family descriptor accepted by [`DegreeDistribution::new`].
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    Point(u32),
    TruncatedPoisson { min: u32, rate: PoissonRate },
    Pmf(Vec<(u32, f64)>),
    PgfCoefficients(Vec<f64>),
}

/// A validated family with normalized parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    PointMass(u32),
    TruncatedPoisson { min: u32, lambda: f64 },
    /// Dense pmf indexed by degree, built from an explicit list of atoms.
    Explicit(Vec<f64>),
    /// Dense pmf indexed by degree, given as PGF coefficients.
    Polynomial(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct DegreeDistribution {
    family: Family,
    mean: f64,
    second_moment: f64,
    /// `table[j] = P[X = j]`; truncated where the Poisson tail drops below 1e-18.
    table: Vec<f64>,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        let family = match spec {
            FamilySpec::Point(k) => Family::PointMass(k),
            FamilySpec::TruncatedPoisson { min, rate } => {
                let lambda = match rate {
                    PoissonRate::Lambda(l) => {
                        if !(l.is_finite() && l > 0.0) {
                            return Err(Error::InvalidSpec(format!(
                                "Poisson rate must be positive, got {l}"
                            )));
                        }
                        l
                    }
                    PoissonRate::Mean(m) => solve_truncated_poisson_rate(min, m)?,
                };
                Family::TruncatedPoisson { min, lambda }
            }
            FamilySpec::Pmf(atoms) => {
                let max = atoms.iter().map(|&(j, _)| j).max().ok_or_else(|| {
                    Error::InvalidSpec("empty pmf".into())
                })?;
                let mut dense = vec![0.0; max as usize + 1];
                for (j, p) in atoms {
                    dense[j as usize] += p;
                }
                Family::Explicit(normalize_dense(dense)?)
            }
            FamilySpec::PgfCoefficients(coeffs) => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidSpec("empty PGF coefficient list".into()));
                }
                Family::Polynomial(normalize_dense(coeffs)?)
            }
        };
        Ok(Self::from_family(family))
    }

    pub fn point(k: u32) -> Self {
        Self::from_family(Family::PointMass(k))
    }

    /// Plain Poisson law with rate `lambda`.
    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::truncated_poisson(0, lambda)
    }

    /// Poisson law with rate `lambda` conditioned on being at least `min`.
    pub fn truncated_poisson(min: u32, lambda: f64) -> Result<Self> {
        Self::new(FamilySpec::TruncatedPoisson {
            min,
            rate: PoissonRate::Lambda(lambda),
        })
    }

    /// Poisson law conditioned on `>= min`, with the rate chosen to hit `mean`.
    pub fn truncated_poisson_with_mean(min: u32, mean: f64) -> Result<Self> {
        Self::new(FamilySpec::TruncatedPoisson {
            min,
            rate: PoissonRate::Mean(mean),
        })
    }

    pub fn from_pmf(atoms: &[(u32, f64)]) -> Result<Self> {
        Self::new(FamilySpec::Pmf(atoms.to_vec()))
    }

    pub fn from_pgf(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(FamilySpec::PgfCoefficients(coeffs))
    }

    fn from_family(family: Family) -> Self {
        let table = match &family {
            Family::PointMass(k) => {
                let mut t = vec![0.0; *k as usize + 1];
                t[*k as usize] = 1.0;
                t
            }
            Family::TruncatedPoisson { min, lambda } => truncated_poisson_table(*min, *lambda),
            Family::Explicit(p) | Family::Polynomial(p) => p.clone(),
        };
        let (mean, second_moment) = match &family {
            Family::TruncatedPoisson { min, lambda } => {
                let m = i64::from(*min);
                let base = poisson_tail(m, *lambda);
                let mean = lambda * poisson_tail(m - 1, *lambda) / base;
                let fact2 = lambda * lambda * poisson_tail(m - 2, *lambda) / base;
                (mean, fact2 + mean)
            }
            _ => {
                let mean = table.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
                let sm = table
                    .iter()
                    .enumerate()
                    .map(|(j, p)| (j * j) as f64 * p)
                    .sum();
                (mean, sm)
            }
        };
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = table
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Self {
            family,
            mean,
            second_moment,
            table,
            cdf,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }

    /// Dense probability table `P[X = j]` for `j < table().len()`.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn pmf(&self, j: u32) -> f64 {
        match &self.family {
            Family::TruncatedPoisson { min, lambda } => {
                if j < *min {
                    0.0
                } else {
                    poisson_log_pmf(j, *lambda).exp() / poisson_tail(i64::from(*min), *lambda)
                }
            }
            _ => self.table.get(j as usize).copied().unwrap_or(0.0),
        }
    }

    /// Largest degree with positive probability, `None` for unbounded support.
    pub fn max_degree(&self) -> Option<u32> {
        match &self.family {
            Family::TruncatedPoisson { .. } => None,
            _ => self
                .table
                .iter()
                .rposition(|&p| p > 0.0)
                .map(|j| j as u32),
        }
    }

    /// True when the law is a single atom.
    pub fn is_degenerate(&self) -> bool {
        match &self.family {
            Family::PointMass(_) => true,
            Family::TruncatedPoisson { .. } => false,
            Family::Explicit(p) | Family::Polynomial(p) => {
                p.iter().filter(|&&x| x > GCD_ATOM_FLOOR).count() == 1
            }
        }
    }

    /// `order`-th derivative of the PGF at `x`.
    pub fn pgf(&self, x: f64, order: u32) -> Result<f64> {
        if order > MAX_PGF_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "PGF argument {x} outside [0, 1]"
            )));
        }
        Ok(self.pgf_at(x, order))
    }

    /// Unchecked PGF evaluation; `x` is clamped to `[0, 1]`.
    pub(crate) fn pgf_at(&self, x: f64, order: u32) -> f64 {
        debug_assert!(order <= MAX_PGF_ORDER);
        let x = x.clamp(0.0, 1.0);
        match &self.family {
            Family::PointMass(k) => {
                let k = *k;
                if order > k {
                    0.0
                } else {
                    falling_factorial(k, order) * powi0(x, k - order)
                }
            }
            Family::TruncatedPoisson { min, lambda } => {
                let m = i64::from(*min);
                let lx = lambda * x;
                lambda.powi(order as i32) * (lx - lambda).exp() * poisson_tail(m - i64::from(order), lx)
                    / poisson_tail(m, *lambda)
            }
            Family::Explicit(p) | Family::Polynomial(p) => {
                // Horner on the differentiated polynomial.
                let r = order as usize;
                if p.len() <= r {
                    return 0.0;
                }
                let mut acc = 0.0;
                for j in (r..p.len()).rev() {
                    acc = acc * x + p[j] * falling_factorial(j as u32, order);
                }
                acc
            }
        }
    }

    pub fn size_biased(&self) -> Result<SizeBiasedDistribution> {
        if self.mean <= 0.0 {
            return Err(Error::DegenerateDistribution(
                "size-biasing requires a positive mean".into(),
            ));
        }
        let law = match &self.family {
            Family::PointMass(k) => Self::point(*k),
            _ => {
                let biased: Vec<f64> = self
                    .table
                    .iter()
                    .enumerate()
                    .map(|(j, p)| j as f64 * p / self.mean)
                    .collect();
                Self::from_family(Family::Explicit(biased))
            }
        };
        Ok(SizeBiasedDistribution {
            base_mean: self.mean,
            law,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if let Family::PointMass(k) = self.family {
            return k;
        }
        let u: f64 = rng.random();
        let j = self.cdf.partition_point(|&c| c <= u);
        j.min(self.cdf.len() - 1) as u32
    }

    /// Histogram of `n` independent draws: `counts[j]` draws equal `j`.
    ///
    /// Sequential conditional binomials; the result has exactly the law of the
    /// histogram of an i.i.d. sample, in `O(table length)` time.
    pub fn sample_counts<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.table.len()];
        let mut left = n;
        let mut mass = 1.0;
        let last = self.table.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (j, &p) in self.table.iter().enumerate() {
            if left == 0 {
                break;
            }
            if j == last {
                counts[j] = left;
                break;
            }
            if p <= 0.0 {
                continue;
            }
            let prob = (p / mass).clamp(0.0, 1.0);
            let c = Binomial::new(left, prob)
                .expect("binomial parameters in range")
                .sample(rng);
            counts[j] = c;
            left -= c;
            mass -= p;
            if mass <= 0.0 {
                counts[last] += left;
                break;
            }
        }
        counts
    }

    /// gcd of the support, ignoring atoms below [`GCD_ATOM_FLOOR`].
    pub fn gcd_support(&self) -> Result<u32> {
        let g = match &self.family {
            Family::PointMass(k) => *k,
            Family::TruncatedPoisson { .. } => 1,
            Family::Explicit(p) | Family::Polynomial(p) => p
                .iter()
                .enumerate()
                .filter(|(_, &x)| x >= GCD_ATOM_FLOOR)
                .fold(0u32, |g, (j, _)| gcd(g, j as u32)),
        };
        if g == 0 {
            return Err(Error::InvalidSpec(
                "support contains no positive degree".into(),
            ));
        }
        Ok(g)
    }

    /// gcd of pairwise differences of support points (0 for a single atom).
    pub fn gcd_differences(&self) -> u32 {
        match &self.family {
            Family::PointMass(_) => 0,
            Family::TruncatedPoisson { .. } => 1,
            Family::Explicit(p) | Family::Polynomial(p) => {
                let mut atoms = p
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x >= GCD_ATOM_FLOOR)
                    .map(|(j, _)| j as u32);
                let first = atoms.next().unwrap_or(0);
                atoms.fold(0, |g, j| gcd(g, j - first))
            }
        }
    }

    /// Smallest support point (ignoring atoms below the gcd floor).
    pub fn min_degree(&self) -> u32 {
        match &self.family {
            Family::PointMass(k) => *k,
            Family::TruncatedPoisson { min, .. } => *min,
            Family::Explicit(p) | Family::Polynomial(p) => p
                .iter()
                .position(|&x| x >= GCD_ATOM_FLOOR)
                .unwrap_or(0) as u32,
        }
    }

    /// The law conditioned on `X >= 1`.
    pub fn strip_zero(&self) -> Result<Self> {
        match &self.family {
            Family::PointMass(0) => Err(Error::DegenerateDistribution(
                "point mass at zero has no positive part".into(),
            )),
            Family::PointMass(_) => Ok(self.clone()),
            Family::TruncatedPoisson { min, lambda } => Self::truncated_poisson((*min).max(1), *lambda),
            Family::Explicit(p) | Family::Polynomial(p) => {
                let mut q = p.clone();
                q[0] = 0.0;
                let total: f64 = q.iter().sum();
                if total <= 0.0 {
                    return Err(Error::DegenerateDistribution(
                        "all mass sits at degree zero".into(),
                    ));
                }
                q.iter_mut().for_each(|x| *x /= total);
                Ok(Self::from_family(match &self.family {
                    Family::Explicit(_) => Family::Explicit(q),
                    _ => Family::Polynomial(q),
                }))
            }
        }
    }
}

/// The size-biased law `P[X' = j] = j P[X = j] / E[X]`.
#[derive(Clone, Debug)]
pub struct SizeBiasedDistribution {
    base_mean: f64,
    law: DegreeDistribution,
}

impl SizeBiasedDistribution {
    pub fn law(&self) -> &DegreeDistribution {
        &self.law
    }

    pub fn base_mean(&self) -> f64 {
        self.base_mean
    }

    pub fn pmf(&self, j: u32) -> f64 {
        self.law.pmf(j)
    }

    pub fn mean(&self) -> f64 {
        self.law.mean()
    }
}

/// Rate `lambda` of `Po(lambda)` conditioned on `>= min` whose mean is `target`.
///
/// The conditional mean `lambda * h_{min-1}(lambda) / h_min(lambda)` is strictly
/// increasing in `lambda`, tends to `min` as `lambda -> 0` (for `min >= 1`) and
/// never exceeds `lambda + min`, so bisection on `(0, target]` converges.
pub fn solve_truncated_poisson_rate(min: u32, target: f64) -> Result<f64> {
    if !target.is_finite() || target <= f64::from(min) || (min == 0 && target <= 0.0) {
        return Err(Error::InfeasibleMean { min, target });
    }
    if min == 0 {
        return Ok(target);
    }
    let m = i64::from(min);
    let mean_at = |l: f64| l * poisson_tail(m - 1, l) / poisson_tail(m, l);
    let (mut lo, mut hi) = (0.0f64, target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let err = (mean_at(lambda) - target).abs();
    if err > 1e-10 {
        return Err(Error::NumericFailure {
            what: "truncated Poisson rate bisection",
            last: lambda,
        });
    }
    Ok(lambda)
}

/// `P[Po(x) >= r]`, i.e. `exp(-x) * h_r(x)` with `h_r(x) = sum_{j >= r} x^j / j!`
/// and `h_r = exp` for `r <= 0`.
pub fn poisson_tail(r: i64, x: f64) -> f64 {
    if r <= 0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    let r = r as u32;
    let mut term = poisson_log_pmf(r, x).exp();
    let mut sum = term;
    let mut j = r;
    loop {
        j += 1;
        term *= x / f64::from(j);
        sum += term;
        if (f64::from(j) > x && term < 1e-17 * sum) || j > r + 100_000 {
            break;
        }
    }
    sum.min(1.0)
}

fn poisson_log_pmf(j: u32, lambda: f64) -> f64 {
    if j == 0 {
        return -lambda;
    }
    -lambda + f64::from(j) * lambda.ln() - ln_factorial(j)
}

fn ln_factorial(j: u32) -> f64 {
    (2..=j).map(|i| f64::from(i).ln()).sum()
}

fn truncated_poisson_table(min: u32, lambda: f64) -> Vec<f64> {
    let base = poisson_tail(i64::from(min), lambda);
    let mut table = vec![0.0; min as usize];
    let mut j = min;
    loop {
        let p = poisson_log_pmf(j, lambda).exp() / base;
        table.push(p);
        if f64::from(j) > lambda && p < 1e-18 {
            break;
        }
        j += 1;
    }
    let total: f64 = table.iter().sum();
    table.iter_mut().for_each(|p| *p /= total);
    table
}

fn normalize_dense(mut p: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidSpec(format!("negative or non-finite probability {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PMF_SUM_TOLERANCE {
        return Err(Error::InvalidSpec(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    p.iter_mut().for_each(|x| *x /= total);
    while p.len() > 1 && p.last() == Some(&0.0) {
        p.pop();
    }
    Ok(p)
}

fn falling_factorial(j: u32, r: u32) -> f64 {
    (0..r).map(|i| f64::from(j - i)).product()
}

fn powi0(x: f64, e: u32) -> f64 {
    if e == 0 {
        1.0
    } else {
        x.powi(e as i32)
    }
}

pub(crate) fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::PointMass(k) => write!(f, "point:{k}"),
            Family::TruncatedPoisson { min, lambda } => write!(f, "po:>={min}:lambda={lambda}"),
            Family::Explicit(p) => {
                let atoms: Vec<String> = p
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0.0)
                    .map(|(j, x)| format!("{j}={x}"))
                    .collect();
                write!(f, "pmf:{}", atoms.join(","))
            }
            Family::Polynomial(p) => {
                let c: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "pgf:[{}]", c.join(","))
            }
        }
    }
}

/// Parses a real number, allowing a `num/den` fraction.
fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::InvalidSpec(format!("cannot parse number {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::InvalidSpec(format!("{msg}: {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("missing family prefix"))?;
        match kind.trim() {
            "point" => rest
                .trim()
                .parse()
                .map(FamilySpec::Point)
                .map_err(|_| bad("bad point degree")),
            "po" => {
                let parts: Vec<&str> = rest.split(':').map(str::trim).collect();
                let (min, rate) = match parts.as_slice() {
                    [rate] => (0, *rate),
                    [min, rate] => {
                        let m = min
                            .strip_prefix(">=")
                            .ok_or_else(|| bad("expected >=MIN"))?
                            .trim()
                            .parse()
                            .map_err(|_| bad("bad truncation point"))?;
                        (m, *rate)
                    }
                    _ => return Err(bad("malformed Poisson spec")),
                };
                let rate = if let Some(v) = rate.strip_prefix("mean=") {
                    PoissonRate::Mean(parse_real(v)?)
                } else if let Some(v) = rate.strip_prefix("lambda=") {
                    PoissonRate::Lambda(parse_real(v)?)
                } else {
                    PoissonRate::Lambda(parse_real(rate)?)
                };
                Ok(FamilySpec::TruncatedPoisson { min, rate })
            }
            "pmf" => {
                let mut atoms = Vec::new();
                for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
                    let (j, p) = item.split_once('=').ok_or_else(|| bad("expected DEG=PROB"))?;
                    let j: u32 = j.trim().parse().map_err(|_| bad("bad degree"))?;
                    atoms.push((j, parse_real(p)?));
                }
                Ok(FamilySpec::Pmf(atoms))
            }
            "pgf" => {
                let inner = rest
                    .trim()
                    .strip_prefix('[')
                    .and_then(|t| t.strip_suffix(']'))
                    .ok_or_else(|| bad("expected [c0,c1,...]"))?;
                let coeffs = inner
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(parse_real)
                    .collect::<Result<Vec<_>>>()?;
                Ok(FamilySpec::PgfCoefficients(coeffs))
            }
            other => Err(bad(&format!("unknown family {other:?}"))),
        }
    }
}

impl FromStr for DegreeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s.parse()?)
    }
}
