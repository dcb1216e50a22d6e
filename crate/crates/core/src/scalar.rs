//! Coefficient fields for the exact residue engine.
//!
//! The engine in [`crate::contour::laurent`] is generic over a field `T`:
//! `Rat` (= `BigRational`) gives exact values, `f64` a fast approximate
//! evaluation of the same residue sums. `Gaussian<T>` adjoins `i`, which is
//! where the Kasteleyn matrix entries (`±1`, `∓a i`) and the sign prefactors
//! `i^k` of the inverse-Kasteleyn formula live.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Complexd, Rat};

/// Field scalar usable as a Laurent-expansion coefficient.
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_i64(v: i64) -> Self;

    /// Integer power with negative exponents allowed (self must be nonzero
    /// for negative `e`).
    fn powi(&self, e: i64) -> Self {
        let mut base = if e < 0 {
            Self::one() / self.clone()
        } else {
            self.clone()
        };
        let mut k = e.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            k >>= 1;
        }
        acc
    }
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Coeff for Rat {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
}

/// Generalized binomial coefficient `C(p, k)` for integer `p` of either sign.
pub fn binomial<T: Coeff>(p: i64, k: u32) -> T {
    let mut acc = T::one();
    for i in 0..k as i64 {
        acc = acc * T::from_i64(p - i) / T::from_i64(i + 1);
    }
    acc
}

/// `(-1)^k` as a scalar.
pub fn neg_one_pow<T: Coeff>(k: i64) -> T {
    if k.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Element of `T(i)`.
#[derive(Clone, PartialEq, Eq)]
pub struct Gaussian<T> {
    pub re: T,
    pub im: T,
}

impl<T: Coeff> Gaussian<T> {
    pub fn new(re: T, im: T) -> Self {
        Gaussian { re, im }
    }

    pub fn real(re: T) -> Self {
        Gaussian {
            re,
            im: T::zero(),
        }
    }

    pub fn i() -> Self {
        Gaussian {
            re: T::zero(),
            im: T::one(),
        }
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => Self::real(T::one()),
            1 => Self::i(),
            2 => Self::real(-T::one()),
            _ => Gaussian {
                re: T::zero(),
                im: -T::one(),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Gaussian {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Squared modulus `re^2 + im^2`.
    pub fn norm_sqr(&self) -> T {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sqr();
        Gaussian {
            re: self.re.clone() / n.clone(),
            im: -self.im.clone() / n,
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        Gaussian {
            re: self.re.clone() * c.clone(),
            im: self.im.clone() * c.clone(),
        }
    }
}

impl Gaussian<Rat> {
    pub fn to_complexd(&self) -> Complexd {
        Complexd::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

impl<T: Coeff> Add for Gaussian<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Gaussian {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<T: Coeff> Sub for Gaussian<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Gaussian {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl<T: Coeff> Mul for Gaussian<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Gaussian {
            re: self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone(),
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl<T: Coeff> Neg for Gaussian<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Gaussian {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl<T: Coeff> Div for Gaussian<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.inv()
    }
}

impl<T: fmt::Debug> fmt::Debug for Gaussian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} + {:?} i)", self.re, self.im)
    }
}

impl<T: Coeff> Zero for Gaussian<T> {
    fn zero() -> Self {
        Gaussian::real(T::zero())
    }
    fn is_zero(&self) -> bool {
        Gaussian::is_zero(self)
    }
}

impl<T: Coeff> One for Gaussian<T> {
    fn one() -> Self {
        Gaussian::real(T::one())
    }
}

impl<T: Coeff> Coeff for Gaussian<T> {
    fn from_i64(v: i64) -> Self {
        Gaussian::real(T::from_i64(v))
    }
}

/// Rough magnitude used for pivot selection in the generic elimination.
pub trait Pivot {
    fn pivot_score(&self) -> f64;
}

impl Pivot for f64 {
    fn pivot_score(&self) -> f64 {
        self.abs()
    }
}

impl Pivot for Rat {
    fn pivot_score(&self) -> f64 {
        rat_to_f64(self).abs()
    }
}

impl<T: Coeff + Pivot> Pivot for Gaussian<T> {
    fn pivot_score(&self) -> f64 {
        self.re.pivot_score().hypot(self.im.pivot_score())
    }
}

/// Lossy conversion of a big rational to f64.
pub fn rat_to_f64(r: &Rat) -> f64 {
    // num-rational's BigRational has no direct to_f64 that is always precise
    // enough; go through a scaled quotient to keep ~1e-17 relative accuracy.
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Huge numerator/denominator: scale both down by a common power of two.
    let bits = r.numer().bits().max(r.denom().bits()) as i64;
    let shift = (bits - 900).max(0) as u64;
    let scale = BigInt::one() << shift;
    let n = (r.numer() / &scale).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() / &scale).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Parse `a` given either as a decimal or a `p/q` fraction.
pub fn parse_rational(s: &str) -> Option<Rat> {
    use num_bigint::BigInt;
    use std::str::FromStr;
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).ok()?;
        let q = BigInt::from_str(q.trim()).ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rat::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        let int = BigInt::from_str(if int.is_empty() { "0" } else { int }).ok()?;
        let frac_v = BigInt::from_str(frac).ok()?;
        let den = BigInt::from(10u32).pow(digits);
        let neg = s.trim_start().starts_with('-');
        let num = &int * &den + if neg { -&frac_v } else { frac_v.clone() };
        return Some(Rat::new(num, den));
    }
    let v = BigInt::from_str(s.trim()).ok()?;
    Some(Rat::from_integer(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_generalized() {
        assert_eq!(binomial::<Rat>(5, 2), Rat::from_integer(10.into()));
        // C(-1, k) = (-1)^k
        assert_eq!(binomial::<Rat>(-1, 3), Rat::from_integer((-1).into()));
        assert_eq!(binomial::<Rat>(-3, 2), Rat::from_integer(6.into()));
        assert_eq!(binomial::<f64>(-2, 3), -4.0);
    }

    #[test]
    fn gaussian_field_ops() {
        let x = Gaussian::<Rat>::new(Coeff::from_i64(3), Coeff::from_i64(-2));
        let y = x.clone() * x.clone().inv();
        assert_eq!(y, Gaussian::real(Rat::one()));
        assert_eq!(Gaussian::<Rat>::i_pow(6), Gaussian::real(-Rat::one()));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("1/2").unwrap(), Rat::new(1.into(), 2.into()));
        assert_eq!(parse_rational("0.25").unwrap(), Rat::new(1.into(), 4.into()));
        assert_eq!(parse_rational("1").unwrap(), Rat::from_integer(1.into()));
        assert!(parse_rational("x").is_none());
    }
}
