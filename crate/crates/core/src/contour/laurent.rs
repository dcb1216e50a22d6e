//! Exact residue evaluation for the rational integrands of the model.
//!
//! Every single-contour ingredient of the finite-size kernels is an integral
//! of the shape
//!
//! ```text
//!   (1/2πi) ∮ (1+az)^p (z-a)^q z^r dz
//! ```
//!
//! over a positively oriented contour enclosing a subset of the poles
//! `{0, a, -1/a}`, and every double-contour ingredient is an iterated
//! integral of two such factors coupled by a Cauchy kernel `1/(x-y)`. For
//! integer exponents all residues are finite sums of generalized binomial
//! series coefficients, so the integrals have closed forms in the
//! coefficient field of `a`. This module computes them, generically over
//! [`Coeff`], so the same code yields exact `Rat` values and fast `f64`
//! approximations.

use std::collections::BTreeMap;

use crate::scalar::{binomial, Coeff};
use crate::Complexd;

/// Poles of the standard integrands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pole {
    /// z = 0
    Origin,
    /// z = a
    A,
}

/// Finite sum of terms `c · (1+az)^p (z-a)^q z^r` with integer exponents.
///
/// The generic parameter is the coefficient field; `a` lives in it.
#[derive(Clone, Debug)]
pub struct LaurentExpr<T> {
    a: T,
    terms: BTreeMap<(i64, i64, i64), T>,
}

impl<T: Coeff> LaurentExpr<T> {
    pub fn zero(a: T) -> Self {
        LaurentExpr {
            a,
            terms: BTreeMap::new(),
        }
    }

    /// Single term `c (1+az)^p (z-a)^q z^r`.
    pub fn term(a: T, c: T, p: i64, q: i64, r: i64) -> Self {
        let mut e = Self::zero(a);
        e.add_term(c, p, q, r);
        e
    }

    pub fn weight(&self) -> &T {
        &self.a
    }

    pub fn add_term(&mut self, c: T, p: i64, q: i64, r: i64) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((p, q, r)).or_insert_with(T::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&(p, q, r));
        }
    }

    pub fn add(&mut self, other: &Self) {
        debug_assert!(self.a == other.a);
        for (&(p, q, r), c) in &other.terms {
            self.add_term(c.clone(), p, q, r);
        }
    }

    pub fn scale(&mut self, c: &T) {
        if c.is_zero() {
            self.terms.clear();
            return;
        }
        for v in self.terms.values_mut() {
            *v = v.clone() * c.clone();
        }
    }

    /// Multiply by the monomial `(1+az)^dp (z-a)^dq z^dr`.
    pub fn shift(&mut self, dp: i64, dq: i64, dr: i64) {
        let old = std::mem::take(&mut self.terms);
        for ((p, q, r), c) in old {
            self.terms.insert((p + dp, q + dq, r + dr), c);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert!(self.a == other.a);
        let mut out = Self::zero(self.a.clone());
        for (&(p1, q1, r1), c1) in &self.terms {
            for (&(p2, q2, r2), c2) in &other.terms {
                out.add_term(c1.clone() * c2.clone(), p1 + p2, q1 + q2, r1 + r2);
            }
        }
        out
    }

    /// Largest pole order at the origin over all terms.
    fn pole_order_origin(&self) -> i64 {
        self.terms
            .keys()
            .map(|&(_, _, r)| -r)
            .max()
            .unwrap_or(0)
            .max(0)
    }

    /// Largest pole order at `z = a` over all terms.
    fn pole_order_a(&self) -> i64 {
        self.terms
            .keys()
            .map(|&(_, q, _)| -q)
            .max()
            .unwrap_or(0)
            .max(0)
    }

    /// Coefficient of `z^k` in the Laurent expansion on the annulus
    /// `0 < |z| < |a|`.
    pub fn coeff_at_origin(&self, k: i64) -> T {
        let a = &self.a;
        let mut acc = T::zero();
        for (&(p, q, r), c) in &self.terms {
            let m = k - r;
            if m < 0 {
                continue;
            }
            // (1+az)^p = Σ_i C(p,i) a^i z^i
            // (z-a)^q  = Σ_j C(q,j) (-1)^(q-j) a^(q-j) z^j
            let mut s = T::zero();
            for i in 0..=m {
                let j = m - i;
                let bi = binomial::<T>(p, i as u32);
                if bi.is_zero() {
                    continue;
                }
                let bj = binomial::<T>(q, j as u32);
                if bj.is_zero() {
                    continue;
                }
                let sign = if (q - j).rem_euclid(2) == 0 {
                    T::one()
                } else {
                    -T::one()
                };
                s = s + bi * a.powi(i) * bj * sign * a.powi(q - j);
            }
            acc = acc + c.clone() * s;
        }
        acc
    }

    /// Coefficient of `(z-a)^k` in the Taylor/Laurent expansion about `z = a`.
    pub fn coeff_at_a(&self, k: i64) -> T {
        let a = &self.a;
        let one_plus_a2 = T::one() + a.clone() * a.clone();
        let mut acc = T::zero();
        for (&(p, q, r), c) in &self.terms {
            let m = k - q;
            if m < 0 {
                continue;
            }
            // (1+az)^p = (1+a^2)^p Σ_i C(p,i) (a/(1+a^2))^i (z-a)^i
            // z^r      = Σ_j C(r,j) a^(r-j) (z-a)^j
            let mut s = T::zero();
            for i in 0..=m {
                let j = m - i;
                let bi = binomial::<T>(p, i as u32);
                if bi.is_zero() {
                    continue;
                }
                let bj = binomial::<T>(r, j as u32);
                if bj.is_zero() {
                    continue;
                }
                s = s + bi * a.powi(i) * one_plus_a2.powi(p - i) * bj * a.powi(r - j);
            }
            acc = acc + c.clone() * s;
        }
        acc
    }

    pub fn residue(&self, pole: Pole) -> T {
        match pole {
            Pole::Origin => self.coeff_at_origin(-1),
            Pole::A => self.coeff_at_a(-1),
        }
    }

    /// `(1/2πi) ∮ self dz` over a contour enclosing exactly `poles`.
    pub fn integral(&self, poles: &[Pole]) -> T {
        let mut acc = T::zero();
        for &p in poles {
            acc = acc + self.residue(p);
        }
        acc
    }

    /// Transfer of the inner integral of an iterated double integral.
    ///
    /// Computes `(1/2πi) ∮ self(x) · sign/(x - y) dx` as a Laurent
    /// expression in the outer variable `y`. The inner contour always
    /// encloses `0` and `a`; it encloses the outer variable's contour iff
    /// `encloses_outer` (in which case the simple pole at `x = y`
    /// contributes `sign · self(y)`).
    pub fn cauchy_transfer(&self, sign: i64, encloses_outer: bool) -> Self {
        let sgn = if sign >= 0 { T::one() } else { -T::one() };
        let mut out = Self::zero(self.a.clone());
        if encloses_outer {
            let mut at_y = self.clone();
            at_y.scale(&sgn);
            out.add(&at_y);
        }
        // res_{x=0}: 1/(x-y) = -Σ_i x^i y^{-i-1}
        for i in 0..self.pole_order_origin() {
            let c = self.coeff_at_origin(-1 - i);
            if !c.is_zero() {
                out.add_term(-sgn.clone() * c, 0, 0, -i - 1);
            }
        }
        // res_{x=a}: 1/(x-y) = Σ_j (-1)^j (x-a)^j / (a-y)^{j+1}
        //                    = -Σ_j (x-a)^j (y-a)^{-j-1}
        for j in 0..self.pole_order_a() {
            let c = self.coeff_at_a(-1 - j);
            if !c.is_zero() {
                out.add_term(-sgn.clone() * c, 0, -j - 1, 0);
            }
        }
        out
    }

    /// Numerical evaluation at a complex point (for the quadrature route).
    pub fn eval_complexd(&self, a: f64, z: Complexd) -> Complexd
    where
        T: CoeffToF64,
    {
        let mut acc = Complexd::new(0.0, 0.0);
        let one_plus_az = Complexd::new(1.0, 0.0) + a * z;
        let z_minus_a = z - a;
        for (&(p, q, r), c) in &self.terms {
            let v = cpowi(one_plus_az, p) * cpowi(z_minus_a, q) * cpowi(z, r);
            acc += v * c.to_f64();
        }
        acc
    }
}

/// Iterated double contour integral
/// `(1/2πi)^2 ∮ dy outer(y) ∮ dx inner(x) · sign/(x-y)`
/// with the outer contour enclosing `{0, a}`.
pub struct ExactDouble<'e, T> {
    pub inner: &'e LaurentExpr<T>,
    pub outer: &'e LaurentExpr<T>,
    /// Sign of the Cauchy kernel `sign/(x_inner - y_outer)`.
    pub sign: i64,
    /// Whether the inner contour encloses the outer one.
    pub inner_encloses_outer: bool,
}

impl<T: Coeff> ExactDouble<'_, T> {
    pub fn eval(&self) -> T {
        let transferred = self.inner.cauchy_transfer(self.sign, self.inner_encloses_outer);
        transferred.mul(self.outer).integral(&[Pole::Origin, Pole::A])
    }
}

/// Complex integer power with negative exponents.
pub fn cpowi(z: Complexd, e: i64) -> Complexd {
    if e >= 0 {
        z.powi(e as i32)
    } else {
        z.powi(e as i32)
    }
}

/// Conversion used by the quadrature route when it reuses an exact integrand.
pub trait CoeffToF64 {
    fn to_f64(&self) -> f64;
}

impl CoeffToF64 for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl CoeffToF64 for crate::Rat {
    fn to_f64(&self) -> f64 {
        crate::scalar::rat_to_f64(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;
    use num_traits::{One, Zero};

    fn rat(p: i64, q: i64) -> Rat {
        Rat::new(p.into(), q.into())
    }

    #[test]
    fn residue_of_inverse_z() {
        // (1/2πi) ∮ 1/z dz = 1
        let e = LaurentExpr::term(rat(1, 2), Rat::one(), 0, 0, -1);
        assert_eq!(e.integral(&[Pole::Origin]), Rat::one());
        // z^k for k != -1 has no residue at the origin
        let e = LaurentExpr::term(rat(1, 2), Rat::one(), 0, 0, 3);
        assert_eq!(e.integral(&[Pole::Origin, Pole::A]), Rat::zero());
    }

    #[test]
    fn residue_simple_pole_at_a() {
        // (1+az)/((z-a) z) at a = 1/2, poles {0, a}:
        // res_0 = -(1+0)/a = -2, res_a = (1+a^2)/a = 5/2; total 1/2.
        let a = rat(1, 2);
        let e = LaurentExpr::term(a, Rat::one(), 1, -1, -1);
        assert_eq!(e.integral(&[Pole::Origin, Pole::A]), rat(1, 2));
    }

    #[test]
    fn geometric_series_double() {
        // With |z| < |w|, 1/(w-z) = Σ_k z^k w^{-k-1}, so
        //   (1/2πi)^2 ∮_w ∮_z dz dw / ((w-z) z) = Σ_k δ_{k,0} δ_{k,0} = 1,
        //   (1/2πi)^2 ∮_w ∮_z dz dw / ((w-z) w) = Σ_k δ_{k,-1} δ_{k,1} = 0.
        let a = rat(1, 2);
        // Inner variable z, kernel 1/(w-z) = -1/(z-w): sign -1.
        let inner = LaurentExpr::term(a.clone(), Rat::one(), 0, 0, -1);
        let outer_one = LaurentExpr::term(a.clone(), Rat::one(), 0, 0, 0);
        let d = ExactDouble {
            inner: &inner,
            outer: &outer_one,
            sign: -1,
            inner_encloses_outer: false,
        };
        assert_eq!(d.eval(), Rat::one());

        let inner_one = LaurentExpr::term(a.clone(), Rat::one(), 0, 0, 0);
        let outer_invw = LaurentExpr::term(a, Rat::one(), 0, 0, -1);
        let d = ExactDouble {
            inner: &inner_one,
            outer: &outer_invw,
            sign: -1,
            inner_encloses_outer: false,
        };
        assert_eq!(d.eval(), Rat::zero());
        // Swapping the nesting makes the Cauchy pole contribute:
        // inner integral = -1, outer ∮ -1/w dw/(2πi) = -1.
        let d = ExactDouble {
            inner: &inner_one,
            outer: &outer_invw,
            sign: -1,
            inner_encloses_outer: true,
        };
        assert_eq!(d.eval(), -Rat::one());
    }

    #[test]
    fn transfer_matches_manual_expansion() {
        // inner = 1/(x-a), kernel 1/(x-y), inner encloses outer:
        // (1/2πi)∮ dx/((x-a)(x-y)) over a contour enclosing both a and y
        // is 0 (residues cancel); check via transfer multiplied out.
        let a = rat(1, 3);
        let inner = LaurentExpr::term(a.clone(), Rat::one(), 0, -1, 0);
        let t = inner.cauchy_transfer(1, true);
        // t(y) = 1/(y-a) - 1/(y-a) = 0
        assert!(t.integral(&[Pole::Origin, Pole::A]).is_zero());
    }
}
