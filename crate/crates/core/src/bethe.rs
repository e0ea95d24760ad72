//! Bethe free entropy of the two-point message law
//! `pi_a = a * delta(delta_0) + (1 - a) * delta(uniform)` over `F_q`.
//!
//! Evaluated from its definition: outer expectations over the variable degree,
//! the size-biased check degree and the number of frozen incoming messages are
//! finite sums, and every inner partition function is an exact weighted count
//! of solutions to `sum_j chi_j sigma_j = 0` (dynamic programming over the
//! partial sums in `F_q`). Nothing here uses the closed form of the potential,
//! which makes it an independent cross-check of [`crate::formula::potential`].

use crate::dist::{DegreeDistribution, Family};
use crate::error::{Error, Result};
use crate::formula::EnsembleSpec;
use crate::linalg::field::is_prime;

/// Largest degree accepted by [`bethe_two_point`].
pub const MAX_ENUMERATION_DEGREE: u32 = 12;

/// Largest field size accepted by [`bethe_two_point`].
pub const MAX_FIELD: u64 = 257;

/// A message: either the atom on zero or the uniform law on `F_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Message {
    Frozen,
    Uniform,
}

impl Message {
    fn weight(self, q: usize, sigma: usize) -> f64 {
        match self {
            Message::Frozen => f64::from(u8::from(sigma == 0)),
            Message::Uniform => 1.0 / q as f64,
        }
    }
}

/// Law of `sum_j chi_j sigma_j` over `F_q` with `sigma_j` drawn from the
/// messages, as a vector indexed by field element.
fn weighted_sum_law(q: usize, messages: &[Message]) -> Vec<f64> {
    let mut law = vec![0.0; q];
    law[0] = 1.0;
    for (j, m) in messages.iter().enumerate() {
        let chi = coefficient(q, j);
        let mut next = vec![0.0; q];
        for (s, &w) in law.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for sigma in 0..q {
                let p = m.weight(q, sigma);
                if p != 0.0 {
                    next[(s + chi * sigma) % q] += w * p;
                }
            }
        }
        law = next;
    }
    law
}

/// Nonzero coefficient attached to the `j`-th slot of a check; the counts do
/// not depend on the choice.
fn coefficient(q: usize, j: usize) -> usize {
    1 + j % (q - 1)
}

fn messages(frozen: usize, uniform: usize) -> Vec<Message> {
    let mut v = vec![Message::Frozen; frozen];
    v.extend(std::iter::repeat_n(Message::Uniform, uniform));
    v
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn finite_support(dist: &DegreeDistribution, side: &str) -> Result<Vec<f64>> {
    match dist.family() {
        Family::TruncatedPoisson { .. } => Err(Error::UnsupportedEnumeration(format!(
            "{side} law has unbounded support"
        ))),
        _ => {
            let max = dist.max_degree().unwrap_or(0);
            if max > MAX_ENUMERATION_DEGREE {
                return Err(Error::UnsupportedEnumeration(format!(
                    "{side} degree {max} exceeds {MAX_ENUMERATION_DEGREE}"
                )));
            }
            Ok(dist.table().to_vec())
        }
    }
}

/// Weak compositions of `total` into `parts` nonnegative parts.
fn compositions(total: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(left: u32, slot: usize, buf: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if slot + 1 == buf.len() {
            buf[slot] = left;
            f(buf);
            return;
        }
        for c in 0..=left {
            buf[slot] = c;
            rec(left - c, slot + 1, buf, f);
        }
    }
    if parts == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut buf = vec![0; parts];
    rec(total, 0, &mut buf, f);
}

fn multinomial(total: u32, counts: &[u32]) -> f64 {
    let mut left = total;
    let mut acc = 1.0;
    for &c in counts {
        acc *= binomial(left, c);
        left -= c;
    }
    acc
}

/// `B(pi_alpha)` for a finite-support ensemble over the prime field `F_q`.
pub fn bethe_two_point(ens: &EnsembleSpec, q: u64, alpha: f64) -> Result<f64> {
    if !is_prime(q) || q > MAX_FIELD {
        return Err(Error::UnsupportedField(format!(
            "q = {q} must be a prime at most {MAX_FIELD}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let qs = q as usize;
    let var = finite_support(ens.var(), "variable")?;
    let check = finite_support(ens.check(), "check")?;
    let biased = ens.check().size_biased()?;
    let biased = biased.law().table();
    let ln_q = (q as f64).ln();
    let pow = |x: f64, e: u32| if e == 0 { 1.0 } else { x.powi(e as i32) };

    // Variable side: each incident check contributes a factor f(sigma_1) =
    // P[sum over the other slots = -chi_1 sigma_1]. Collect the law of f.
    let mut factors: Vec<(Vec<f64>, f64)> = Vec::new();
    for (kh, &pk) in biased.iter().enumerate() {
        if pk == 0.0 || kh == 0 {
            continue;
        }
        let others = kh as u32 - 1;
        for frozen in 0..=others {
            let w = pk * binomial(others, frozen) * pow(alpha, frozen) * pow(1.0 - alpha, others - frozen);
            if w == 0.0 {
                continue;
            }
            let law = weighted_sum_law(qs, &messages(frozen as usize, (others - frozen) as usize));
            // slot 0 holds sigma_1 with coefficient chi_0 = 1; the others start at slot 1,
            // which only permutes coefficients and leaves the law unchanged.
            let factor: Vec<f64> = (0..qs).map(|s1| law[(qs - s1 % qs) % qs]).collect();
            match factors
                .iter_mut()
                .find(|(f, _)| f.iter().zip(&factor).all(|(a, b)| (a - b).abs() < 1e-15))
            {
                Some(entry) => entry.1 += w,
                None => factors.push((factor, w)),
            }
        }
    }

    let mut variable_term = 0.0;
    for (deg, &pd) in var.iter().enumerate() {
        if pd == 0.0 {
            continue;
        }
        let deg = deg as u32;
        let mut acc = 0.0;
        compositions(deg, factors.len(), &mut |counts| {
            let prob = multinomial(deg, counts)
                * counts
                    .iter()
                    .zip(&factors)
                    .map(|(&c, (_, w))| pow(*w, c))
                    .product::<f64>();
            if prob == 0.0 {
                return;
            }
            let z: f64 = (0..qs)
                .map(|s1| {
                    counts
                        .iter()
                        .zip(&factors)
                        .map(|(&c, (f, _))| pow(f[s1], c))
                        .product::<f64>()
                })
                .sum();
            acc += prob * z.ln() / ln_q;
        });
        variable_term += pd * acc;
    }

    // Check side: (k - 1) log_q of the probability that a check of degree k is
    // satisfied by independent incoming messages.
    let mut check_term = 0.0;
    for (kdeg, &pk) in check.iter().enumerate() {
        if pk == 0.0 || kdeg <= 1 {
            continue;
        }
        let kdeg = kdeg as u32;
        let mut acc = 0.0;
        for frozen in 0..=kdeg {
            let w = binomial(kdeg, frozen) * pow(alpha, frozen) * pow(1.0 - alpha, kdeg - frozen);
            if w == 0.0 {
                continue;
            }
            let law = weighted_sum_law(qs, &messages(frozen as usize, (kdeg - frozen) as usize));
            acc += w * law[0].ln() / ln_q;
        }
        check_term += pk * f64::from(kdeg - 1) * acc;
    }

    Ok(variable_term - ens.d() / ens.k() * check_term)
}
