use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Exclusive upper bound on explicit field sizes.
pub const MAX_PRIME_FIELD: u32 = 1 << 16;

const PROXY_CENTER: u32 = 1 << 31;
const PROXY_WINDOW: u32 = 1 << 24;

/// Trial-division primality for `n < 2^32`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The scalar field of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    /// `F_q` for a prime `q < 2^16`.
    Prime(u32),
    /// Stand-in for the rationals: arithmetic modulo the recorded prime near `2^31`.
    RationalProxy(u32),
}

impl FieldSpec {
    pub fn prime(q: u32) -> Result<Self> {
        if q >= MAX_PRIME_FIELD || !is_prime(u64::from(q)) {
            return Err(Error::UnsupportedField(format!(
                "{q} is not a prime below {MAX_PRIME_FIELD}"
            )));
        }
        Ok(FieldSpec::Prime(q))
    }

    pub fn rational_proxy(p: u32) -> Result<Self> {
        if p < MAX_PRIME_FIELD || !is_prime(u64::from(p)) {
            return Err(Error::UnsupportedField(format!(
                "rational proxy modulus {p} must be a prime of at least {MAX_PRIME_FIELD}"
            )));
        }
        Ok(FieldSpec::RationalProxy(p))
    }

    /// Picks a uniformly placed prime in a window just below `2^31`.
    pub fn random_rational_proxy<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut p = rng.random_range(PROXY_CENTER - PROXY_WINDOW..PROXY_CENTER) | 1;
        while !is_prime(u64::from(p)) {
            p -= 2;
        }
        FieldSpec::RationalProxy(p)
    }

    pub fn modulus(&self) -> u32 {
        match *self {
            FieldSpec::Prime(q) | FieldSpec::RationalProxy(q) => q,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, FieldSpec::Prime(_))
    }

    pub fn arithmetic(&self) -> Fp {
        Fp::new(self.modulus())
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Prime(q) => write!(f, "{q}"),
            FieldSpec::RationalProxy(p) => write!(f, "rational:{p}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    /// `q` or `gf(q)` for a prime field, `rational:p` for the proxy.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::UnsupportedField(format!("cannot parse field {s:?}"));
        if let Some(p) = s.strip_prefix("rational:") {
            return FieldSpec::rational_proxy(p.trim().parse().map_err(|_| bad())?);
        }
        let q = s
            .strip_prefix("gf(")
            .and_then(|r| r.strip_suffix(')'))
            .unwrap_or(&s);
        FieldSpec::prime(q.trim().parse().map_err(|_| bad())?)
    }
}

/// Arithmetic modulo a prime `p < 2^32`.
#[derive(Clone, Debug)]
pub struct Fp {
    p: u32,
    inverses: Option<Vec<u32>>,
}

impl Fp {
    pub fn new(p: u32) -> Self {
        let inverses = (p < MAX_PRIME_FIELD).then(|| {
            let mut inv = vec![0u32; p as usize];
            if p > 1 {
                inv[1] = 1;
            }
            // inv[i] = -(p / i) * inv[p mod i]
            for i in 2..p as usize {
                let pi = p as u64;
                let v = (pi - (pi / i as u64) * u64::from(inv[p as usize % i]) % pi) % pi;
                inv[i] = v as u32;
            }
            inv
        });
        Fp { p, inverses }
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = u64::from(a) + u64::from(b);
        (s % u64::from(self.p)) as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.p - b % self.p)
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 { 0 } else { self.p - a }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        (u64::from(a) * u64::from(b) % u64::from(self.p)) as u32
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut acc = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element.
    #[inline]
    pub fn inv(&self, a: u32) -> u32 {
        debug_assert!(a % self.p != 0);
        match &self.inverses {
            Some(t) => t[a as usize],
            None => self.pow(a, u64::from(self.p) - 2),
        }
    }

    /// `a - c * b`, the elimination update.
    #[inline]
    pub fn sub_mul(&self, a: u32, c: u32, b: u32) -> u32 {
        self.sub(a, self.mul(c, b))
    }
}
