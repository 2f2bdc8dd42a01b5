//! Floating-point helpers and the Wasserstein exponent.

use alloc::format;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

/// Euclidean norm of a slice, scaled to avoid overflow.
pub fn hypot_n(xs: &[f64]) -> f64 {
    let scale = xs.iter().fold(0.0f64, |m, &x| m.max(abs(x)));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let mut acc = NeumaierSum::new();
    for &x in xs {
        let y = x / scale;
        acc.add(y * y);
    }
    scale * sqrt(acc.total())
}

/// Compensated summation; keeps long sums of equal terms exact to a few ulps.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if abs(self.sum) >= abs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Exponent `p ∈ [1, ∞]` of a Wasserstein-type distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);

    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(format!("p = {p} is below 1")));
        }
        if p.is_infinite() {
            return Ok(Exponent::Infinity);
        }
        Ok(Exponent::Finite(p))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    fn integer(p: f64) -> Option<u32> {
        if libm::trunc(p) == p && p <= 64.0 {
            Some(p as u32)
        } else {
            None
        }
    }

    /// `x^p` for a non-negative `x`. Integer exponents use repeated squaring.
    pub fn pow(&self, x: f64) -> f64 {
        match *self {
            Exponent::Infinity => x,
            Exponent::Finite(p) => match Self::integer(p) {
                Some(k) => powi(x, k),
                None => libm::exp(p * libm::log(x)),
            },
        }
    }

    /// Inverse of [`Exponent::pow`] on `[0, ∞)`.
    pub fn root(&self, x: f64) -> f64 {
        match *self {
            Exponent::Infinity => x,
            Exponent::Finite(1.0) => x,
            Exponent::Finite(2.0) => sqrt(x),
            Exponent::Finite(p) => {
                if x == 0.0 {
                    0.0
                } else {
                    libm::exp(libm::log(x) / p)
                }
            }
        }
    }

    /// Combines non-negative terms into an `ℓ^p` norm (`max` for `p = ∞`).
    pub fn aggregate<I: IntoIterator<Item = f64>>(&self, terms: I) -> f64 {
        match self {
            Exponent::Infinity => terms.into_iter().fold(0.0, f64::max),
            Exponent::Finite(_) => {
                let mut acc = NeumaierSum::new();
                acc.extend(terms.into_iter().map(|t| self.pow(t)));
                self.root(acc.total())
            }
        }
    }
}

fn powi(mut base: f64, mut k: u32) -> f64 {
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => f.write_str("inf"),
            Exponent::Finite(p) => write!(f, "{p}"),
        }
    }
}

/// Accepts `inf`, a decimal (`2`, `1.5`) or a rational `a/b`.
impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Exponent::Infinity);
        }
        let bad = || Error::InvalidExponent(format!("cannot parse `{s}`"));
        let value = match s.split_once('/') {
            Some((num, den)) => {
                let num: f64 = num.trim().parse().map_err(|_| bad())?;
                let den: f64 = den.trim().parse().map_err(|_| bad())?;
                if den == 0.0 {
                    return Err(bad());
                }
                num / den
            }
            None => s.parse().map_err(|_| bad())?,
        };
        if !value.is_finite() {
            return Err(bad());
        }
        Exponent::finite(value)
    }
}

/// Relative closeness used by the checks: `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    abs(a - b) <= tol * abs(a).max(abs(b)).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exponents() {
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::TWO);
        assert_eq!("3/2".parse::<Exponent>().unwrap(), Exponent::Finite(1.5));
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert!("0.5".parse::<Exponent>().is_err());
        assert!("1/0".parse::<Exponent>().is_err());
        assert!("abc".parse::<Exponent>().is_err());
    }

    #[test]
    fn pow_and_root_agree() {
        for p in [1.0, 2.0, 3.0, 1.5, 2.5] {
            let e = Exponent::Finite(p);
            for x in [0.0, 0.25, 1.0, 7.5] {
                let y = e.root(e.pow(x));
                assert!(close(x, y, 1e-14), "p={p} x={x} y={y}");
            }
        }
    }

    #[test]
    fn compensated_sum_of_repeated_terms() {
        let mut acc = NeumaierSum::new();
        for _ in 0..10_000 {
            acc.add(0.1 * 0.1);
        }
        assert!(close(acc.total(), 10_000.0 * (0.1 * 0.1), 1e-15));
    }

    #[test]
    fn aggregate_infinity_is_max() {
        assert_eq!(Exponent::Infinity.aggregate([1.0, 3.0, 2.0]), 3.0);
        assert_eq!(Exponent::TWO.aggregate([3.0, 4.0]), 5.0);
        assert_eq!(Exponent::TWO.aggregate(core::iter::empty()), 0.0);
    }
}
