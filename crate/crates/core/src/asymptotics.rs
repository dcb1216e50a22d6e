//! Scaling machinery towards the tacnode GUE-minor kernel.
//!
//! The size is `n = 2t + eps` and the weight `a = 1 - beta/sqrt(t)`; the
//! lattice arguments scale as `xi = 4t + 2 eps - 2u`, `eta = 2t + 2 kappa - 1`
//! with `kappa = [y sqrt(t)]` (the integer part is taken explicitly, so all
//! identities here are exact lattice statements in `(u, kappa)`).
//!
//! The prefactored L-kernel decomposes exactly into three terms
//! `C^(1) + C^(2) + C^(3)`; the same terms at `delta = 1` give the thinned,
//! prefactored K-kernel with shifted arguments. Each term has two
//! evaluations: a direct one on the Gamma_{0,a} contours (small `t` only —
//! the integrands grow like `3^n`) and a rescaled one on the unit circle
//! `C_1` and a vertical line `C_2`, where the integrands stay `O(1)`
//! uniformly in `t`. The two are equal at finite `t` by the change of
//! variables `z = -zeta/sqrt(t)`, which the test suite checks.

use num_traits::{One, Zero};

use crate::contour::laurent::{CoeffToF64, LaurentExpr};
use crate::contour::{
    integrate_circle, integrate_double, integrate_gaussian_line, CircleContour, ContourSpec,
    QuadOpts, TruncatedLine,
};
use crate::error::{Error, Result};
use crate::kernels::finite::{DoubleSpec, Evaluator, FiniteKernel};
use crate::kernels::limit::{LimitKernels, TacnodeParams};
use crate::linalg;
use crate::region::{DiamondParams, Weight};
use crate::scalar::{neg_one_pow, rat_to_f64, Coeff};
use crate::{Complexd, Rat};

/// Scaling parameters: `n = 2t + epsilon`, `a = 1 - beta/sqrt(t)`.
#[derive(Clone, Debug)]
pub struct ScalingParams {
    pub t: i64,
    pub epsilon: i64,
    pub beta: Rat,
    pub rho: i64,
}

impl ScalingParams {
    pub fn new(t: i64, epsilon: i64, beta: Rat, rho: i64) -> Result<Self> {
        if t < 1 || !(0..=1).contains(&epsilon) || rho < 1 {
            return Err(Error::InvalidParams(
                "need t >= 1, epsilon in {0,1}, rho >= 1".into(),
            ));
        }
        let sp = ScalingParams { t, epsilon, beta, rho };
        if !(sp.a_f64() > 0.0) {
            return Err(Error::InvalidParams(
                "a = 1 - beta/sqrt(t) must be positive (t > beta^2)".into(),
            ));
        }
        Ok(sp)
    }

    pub fn n(&self) -> i64 {
        2 * self.t + self.epsilon
    }

    pub fn sqrt_t(&self) -> f64 {
        (self.t as f64).sqrt()
    }

    /// Integer square root when `t` is a perfect square.
    pub fn sqrt_t_exact(&self) -> Option<i64> {
        let q = (self.t as f64).sqrt().round() as i64;
        (q * q == self.t).then_some(q)
    }

    pub fn beta_f64(&self) -> f64 {
        rat_to_f64(&self.beta)
    }

    pub fn a_f64(&self) -> f64 {
        1.0 - self.beta_f64() / self.sqrt_t()
    }

    /// The weight `a`, exact when `sqrt(t)` is an integer.
    pub fn a_weight(&self) -> Weight {
        match self.sqrt_t_exact() {
            Some(q) => Weight::Rational(Rat::one() - self.beta.clone() / Rat::from_integer(q.into())),
            None => Weight::Real(self.a_f64()),
        }
    }

    pub fn diamond(&self) -> Result<DiamondParams> {
        DiamondParams::new(self.n(), self.rho, self.a_weight())
    }

    pub fn tacnode(&self) -> TacnodeParams {
        TacnodeParams {
            beta: self.beta_f64(),
            rho: self.rho,
        }
    }

    /// Lattice coordinates of a scaled point: `xi = 4t + 2eps - 2u`,
    /// `eta = 2t + 2 kappa - 1`.
    pub fn lattice_point(&self, u: i64, kappa: i64) -> (i64, i64) {
        (4 * self.t + 2 * self.epsilon - 2 * u, 2 * self.t + 2 * kappa - 1)
    }

    /// Diamond coordinates of the K-scaling (sc1): `r = t + kappa`,
    /// `x = u + kappa - (rho + eps)/2`.
    pub fn diamond_point(&self, u: i64, kappa: i64) -> (i64, i64) {
        (self.t + kappa, u + kappa - (self.rho + self.epsilon) / 2)
    }

    /// Snap a real `y` to the lattice: `kappa = round(y sqrt(t))`; returns
    /// the integer and the effective y it represents.
    pub fn snap_y(&self, y: f64) -> (i64, f64) {
        let kappa = (y * self.sqrt_t()).round() as i64;
        (kappa, kappa as f64 / self.sqrt_t())
    }
}

/// The exact prefactor `f_{t,delta}` of the decomposition, in the scalar of
/// the chosen evaluator (`sqrt(t)` must be an integer for exact scalars).
fn prefactor<V: Coeff>(a: &V, sqrt_t: V, delta: i64, u1: i64, k1: i64, u2: i64, k2: i64) -> V {
    let minus_a = -a.clone();
    let minus_rt = -sqrt_t.clone();
    minus_a.powi(k2 - k1)
        * minus_rt.powi(u2 - u1)
        * sqrt_t.powi(1 - 2 * delta)
        * neg_one_pow::<V>(delta)
}

/// `f_{t,delta}` in floating point (any `t`).
pub fn prefactor_f(t: i64, delta: i64, u1: i64, k1: i64, u2: i64, k2: i64, a: f64) -> f64 {
    let rt = (t as f64).sqrt();
    (-a).powi((k2 - k1) as i32)
        * (-rt).powi((u2 - u1) as i32)
        * rt.powi((1 - 2 * delta) as i32)
        * if delta % 2 == 0 { 1.0 } else { -1.0 }
}

// ---------------------------------------------------------------------------
// Direct C-terms on the Gamma_{0,a} contours (small t).
// ---------------------------------------------------------------------------

/// The three terms of the decomposition, evaluated directly through a
/// finite-size kernel engine built at `n = 2t + eps`. Exact in rational
/// arithmetic when the engine is exact and `sqrt(t)` is an integer.
pub fn c_terms_direct<E: Evaluator>(
    kernel: &FiniteKernel<E>,
    sp: &ScalingParams,
    delta: i64,
    u1: i64,
    k1: i64,
    u2: i64,
    k2: i64,
) -> Result<(E::V, E::V, E::V)> {
    let q = sp
        .sqrt_t_exact()
        .ok_or_else(|| Error::InvalidParams("direct C-terms need a perfect square t".into()))?;
    assert_eq!(kernel.n, sp.n());
    let ev = kernel.evaluator();
    let a = ev.weight();
    let one_a2 = E::V::one() + a.clone() * a.clone();
    let f = prefactor(&a, E::V::from_i64(q), delta, u1, k1, u2, k2);
    let (t, eps) = (sp.t, sp.epsilon);

    // C^(1): single integral, present only behind the delta-gate.
    let gate = if delta == 0 { u2 < u1 } else { k1 < k2 };
    let c1 = if gate {
        let e = LaurentExpr::term(
            a.clone(),
            E::V::one(),
            k1 - k2 - 1 + delta,
            -(k1 - k2 + 1 - delta),
            u2 - u1,
        );
        -(f.clone() * one_a2.clone() * ev.single(&e)?)
    } else {
        E::V::zero()
    };

    // C^(2): nested double integral.
    let inner = LaurentExpr::term(a.clone(), E::V::one(), -(t + k2), -(t - k2 + 1 + eps), u2);
    let outer = LaurentExpr::term(
        a.clone(),
        E::V::one(),
        t + k1 - 1 + delta,
        t - k1 + eps + delta,
        -u1,
    );
    let c2 = f.clone()
        * one_a2.clone()
        * ev.double(&DoubleSpec {
            inner,
            outer,
            sign: 1,
            inner_encloses_outer: true,
        })?;

    // C^(3): resolvent inner product with the delta-modified A-vector and
    // the plain B-vector at the scaled lattice point.
    let (xi2, eta2) = sp.lattice_point(u2, k2);
    let a_delta = |k: i64| -> Result<E::V> {
        let single = ev.single(&LaurentExpr::term(
            a.clone(),
            E::V::one(),
            -(t + eps - k1 + 1 - delta),
            -(t + k1 + 1 - delta),
            2 * t + eps - u1 - k,
        ))?;
        let d = ev.double(&DoubleSpec {
            inner: LaurentExpr::term(
                a.clone(),
                E::V::one(),
                -(2 * t + eps),
                -(2 * t + eps + 1),
                2 * t + eps - k,
            ),
            outer: LaurentExpr::term(
                a.clone(),
                E::V::one(),
                t + k1 - 1 + delta,
                t - k1 + eps + delta,
                -u1,
            ),
            sign: 1,
            inner_encloses_outer: true,
        })?;
        Ok(neg_one_pow::<E::V>(k) * (d - single))
    };
    let ip = kernel.resolvent_ip(
        a_delta,
        |k| kernel.b_cap(xi2, eta2, k),
        kernel.b_cap_support_hi(xi2),
    )?;
    let c3 = -(f * one_a2 * ip);
    Ok((c1, c2, c3))
}

/// Left-hand side of the exact decomposition identity: the prefactored
/// L-kernel at the scaled lattice point.
pub fn scaled_l_direct<E: Evaluator>(
    kernel: &FiniteKernel<E>,
    sp: &ScalingParams,
    u1: i64,
    k1: i64,
    u2: i64,
    k2: i64,
) -> Result<E::V> {
    let q = sp
        .sqrt_t_exact()
        .ok_or_else(|| Error::InvalidParams("direct scaling needs a perfect square t".into()))?;
    let p1 = sp.lattice_point(u1, k1);
    let p2 = sp.lattice_point(u2, k2);
    let l = kernel.l_kernel(p1, p2)?;
    let a = kernel.evaluator().weight();
    let rt = E::V::from_i64(q);
    // (-a)^{(eta1-eta2)/2} (-sqrt t)^{(xi1-xi2)/2} sqrt t
    let pref = (-a).powi((p1.1 - p2.1) / 2) * (-rt.clone()).powi((p1.0 - p2.0) / 2) * rt;
    Ok(pref * l)
}

/// The thinned, prefactored K-kernel at the scaled diamond point:
/// `(1-p_n) a^{r2-r1} (sqrt t)^{x1-x2-r1+r2} (-1)^{x1-x2} K(2r1,x1;2r2,x2) sqrt t`
/// with `1 - p_n = 2/sqrt(t)`.
pub fn scaled_k_direct<E: Evaluator>(
    kernel: &FiniteKernel<E>,
    sp: &ScalingParams,
    u1: i64,
    k1: i64,
    u2: i64,
    k2: i64,
) -> Result<E::V> {
    let q = sp
        .sqrt_t_exact()
        .ok_or_else(|| Error::InvalidParams("direct scaling needs a perfect square t".into()))?;
    let (r1, x1) = sp.diamond_point(u1, k1);
    let (r2, x2) = sp.diamond_point(u2, k2);
    let kk = kernel.k_kernel(2 * r1, x1, 2 * r2, x2)?;
    let a = kernel.evaluator().weight();
    let rt = E::V::from_i64(q);
    let pref = E::V::from_i64(2)
        * a.powi(r2 - r1)
        * rt.powi(x1 - x2 - r1 + r2)
        * neg_one_pow::<E::V>(x1 - x2);
    Ok(pref * kk)
}

// ---------------------------------------------------------------------------
// Rescaled C-terms on the unit circle and a vertical line (any t).
// ---------------------------------------------------------------------------

/// Evaluator for the rescaled integrands, numerically stable uniformly in
/// `t`: integrands are `O(1)` on the unit circle `C_1` and Gaussian-bounded
/// on the vertical line `C_2`.
pub struct RescaledKernel {
    pub sp: ScalingParams,
    opts: QuadOpts,
    circle: CircleContour<f64>,
    line: TruncatedLine<f64>,
}

impl RescaledKernel {
    pub fn new(sp: ScalingParams, tol: f64) -> Self {
        let line_re = sp.beta_f64().max(0.0) + 1.5;
        RescaledKernel {
            sp,
            opts: QuadOpts::with_tol(tol),
            circle: CircleContour::origin(1.0),
            line: TruncatedLine::new(line_re, 8.0),
        }
    }

    fn a(&self) -> f64 {
        self.sp.a_f64()
    }

    fn rt(&self) -> f64 {
        self.sp.sqrt_t()
    }

    /// `F_kappa(z) = (1/a - z/rt)^{t+kappa} (a + z/rt)^{t-kappa}`.
    fn f_pow(&self, kappa: i64, z: Complexd) -> Complexd {
        let (a, rt, t) = (self.a(), self.rt(), self.sp.t);
        let b1 = Complexd::new(1.0 / a, 0.0) - z / rt;
        let b2 = Complexd::new(a, 0.0) + z / rt;
        b1.powi((t + kappa) as i32) * b2.powi((t - kappa) as i32)
    }

    fn u_plus(&self, z: Complexd) -> Complexd {
        // a + z/sqrt(t)
        Complexd::new(self.a(), 0.0) + z / self.rt()
    }

    fn u_minus(&self, z: Complexd) -> Complexd {
        // 1 - a z/sqrt(t)
        Complexd::new(1.0, 0.0) - self.a() * z / self.rt()
    }

    fn inv_a_minus(&self, z: Complexd) -> Complexd {
        // 1/a - z/sqrt(t)
        Complexd::new(1.0 / self.a(), 0.0) - z / self.rt()
    }

    fn realify(&self, v: Complexd, err: f64) -> Result<f64> {
        let allow = (1e-8f64).max(err * 100.0).max(1e-8 * v.re.abs());
        if v.im.abs() > allow {
            return Err(Error::NonFinite("imaginary residue in a real kernel value"));
        }
        Ok(v.re)
    }

    /// `C^(1)`: evaluated directly, its exponents stay `O(kappa)`.
    pub fn c1(&self, delta: i64, u1: i64, k1: i64, u2: i64, k2: i64) -> Result<f64> {
        let gate = if delta == 0 { u2 < u1 } else { k1 < k2 };
        if !gate {
            return Ok(0.0);
        }
        let a = self.a();
        let f = prefactor_f(self.sp.t, delta, u1, k1, u2, k2, a);
        let e = LaurentExpr::term(
            a,
            1.0f64,
            k1 - k2 - 1 + delta,
            -(k1 - k2 + 1 - delta),
            u2 - u1,
        );
        let q = integrate_circle(
            |z| e.eval_complexd(a, z),
            &crate::contour::gamma_0a(a),
            &self.opts,
        )?;
        let one_a2 = 1.0 + a * a;
        Ok(-f * one_a2 * self.realify(q.value, q.est_error)?)
    }

    /// `C^(2)` in rescaled form (exactly equal to the direct term).
    pub fn c2(&self, delta: i64, u1: i64, k1: i64, u2: i64, k2: i64) -> Result<f64> {
        let a = self.a();
        let (eps, t) = (self.sp.epsilon, self.sp.t);
        let scale = (1.0 + a * a) * a.powi((delta - 1) as i32) * (t as f64).powi(-delta as i32);
        let q = integrate_double(
            |w| {
                w.powi(u2 as i32)
                    / (self.f_pow(k2, w) * self.u_plus(w).powi((1 + eps) as i32))
            },
            |z| {
                z.powi((-u1) as i32)
                    * self.f_pow(k1, z)
                    * self.inv_a_minus(z).powi((delta - 1) as i32)
                    * self.u_plus(z).powi((eps + delta) as i32)
            },
            &ContourSpec::Line(self.line),
            &ContourSpec::Circle(self.circle),
            1.0,
            &self.opts,
        )?;
        Ok(scale * self.realify(q.value, q.est_error)?)
    }

    /// Rescaled `A~_delta(kappa)`.
    pub fn a_tilde(&self, delta: i64, u1: i64, k1: i64, kappa: i64) -> Result<f64> {
        let a = self.a();
        let (eps, rho) = (self.sp.epsilon, self.sp.rho);
        let sign_single = if (3 - delta) % 2 == 0 { 1.0 } else { -1.0 };
        let scale = a.powi((delta - eps - 1) as i32);
        let single = integrate_gaussian_line(
            |w| {
                w.powi((rho - 1 - u1 - kappa) as i32) / self.f_pow(-k1, w)
                    * self.inv_a_minus(w).powi((delta - eps - 1) as i32)
                    * self.u_plus(w).powi((delta - 1) as i32)
            },
            &self.line,
            &self.opts,
        )?;
        let sign_double = if delta % 2 == 0 { 1.0 } else { -1.0 };
        let double = integrate_double(
            |w| {
                w.powi((rho - 1 - kappa) as i32)
                    / (self.f_pow(0, w)
                        * self.f_pow(0, w)
                        * self.inv_a_minus(w).powi(eps as i32)
                        * self.u_plus(w).powi((eps + 1) as i32))
            },
            |z| {
                z.powi((-u1) as i32)
                    * self.f_pow(k1, z)
                    * self.inv_a_minus(z).powi((delta - 1) as i32)
                    * self.u_plus(z).powi((eps + delta) as i32)
            },
            &ContourSpec::Line(self.line),
            &ContourSpec::Circle(self.circle),
            1.0,
            &self.opts,
        )?;
        let v = sign_single * scale * self.realify(single.value, single.est_error)?
            + sign_double * scale * self.realify(double.value, double.est_error)?;
        Ok(v)
    }

    /// Rescaled `B~(lambda)`; vanishes for `lambda >= max(rho, rho - u2)`.
    pub fn b_tilde(&self, u2: i64, k2: i64, lambda: i64) -> Result<f64> {
        let (eps, rho) = (self.sp.epsilon, self.sp.rho);
        let single = integrate_circle(
            |z| {
                self.f_pow(-k2, z)
                    * z.powi((u2 + lambda - rho) as i32)
                    * self.u_minus(z).powi(eps as i32)
            },
            &self.circle,
            &self.opts,
        )?;
        let double = integrate_double(
            |z| {
                z.powi(u2 as i32)
                    / (self.f_pow(k2, z) * self.u_plus(z).powi((1 + eps) as i32))
            },
            |w| {
                w.powi((lambda - rho) as i32)
                    * self.f_pow(0, w)
                    * self.f_pow(0, w)
                    * self.u_plus(w).powi((1 + eps) as i32)
                    * self.u_minus(w).powi(eps as i32)
            },
            &ContourSpec::Line(self.line),
            &ContourSpec::Circle(self.circle),
            -1.0,
            &self.opts,
        )?;
        Ok(self.realify(single.value, single.est_error)?
            + self.realify(double.value, double.est_error)?)
    }

    pub fn b_tilde_support_hi(&self, u2: i64) -> i64 {
        (self.sp.rho - 1).max(self.sp.rho - 1 - u2)
    }

    /// Rescaled resolvent kernel `K~(lambda, kappa)`; zero for
    /// `kappa >= rho`.
    pub fn k_tilde(&self, lambda: i64, kappa: i64) -> Result<f64> {
        if kappa >= self.sp.rho {
            return Ok(0.0);
        }
        let (eps, rho) = (self.sp.epsilon, self.sp.rho);
        let q = integrate_double(
            |z| {
                1.0 / (z.powi((lambda - rho + 1) as i32)
                    * self.f_pow(0, z)
                    * self.f_pow(0, z)
                    * self.u_minus(z).powi(eps as i32)
                    * self.u_plus(z).powi((eps + 1) as i32))
            },
            |w| {
                w.powi((kappa - rho) as i32)
                    * self.f_pow(0, w)
                    * self.f_pow(0, w)
                    * self.u_minus(w).powi(eps as i32)
                    * self.u_plus(w).powi((eps + 1) as i32)
            },
            &ContourSpec::Line(self.line),
            &ContourSpec::Circle(self.circle),
            1.0,
            &self.opts,
        )?;
        self.realify(q.value, q.est_error)
    }

    /// `C^(3)` assembled from the rescaled pieces: a rho x rho resolvent
    /// solve plus the finite support sum of `B~`.
    pub fn c3(&self, delta: i64, u1: i64, k1: i64, u2: i64, k2: i64) -> Result<f64> {
        let rho = self.sp.rho;
        let a = self.a();
        let lam_hi = self.b_tilde_support_hi(u2);
        // (I - K~) on the column support {0, .., rho-1}.
        let size = rho as usize;
        let mut block = vec![vec![0.0f64; size]; size];
        for (i, lambda) in (0..rho).enumerate() {
            for (j, kappa) in (0..rho).enumerate() {
                let k = self.k_tilde(lambda, kappa)?;
                block[i][j] = if i == j { 1.0 - k } else { -k };
            }
        }
        let a_s: Vec<f64> = (0..rho)
            .map(|k| self.a_tilde(delta, u1, k1, k))
            .collect::<Result<_>>()?;
        let xs = linalg::solve(&block, &[a_s])?.remove(0);
        let mut ip = 0.0;
        for lambda in 0..=lam_hi {
            let b = self.b_tilde(u2, k2, lambda)?;
            if b.abs() < 1e-300 {
                continue;
            }
            let mut x = self.a_tilde(delta, u1, k1, lambda)?;
            for (j, kappa) in (0..rho).enumerate() {
                x += self.k_tilde(lambda, kappa)? * xs[j];
            }
            ip += x * b;
        }
        let tail = self.b_tilde(u2, k2, lam_hi + 1)?;
        if tail.abs() > 1e-8 {
            return Err(Error::TruncationCertificate(format!(
                "B~({}) = {tail:.3e} expected to vanish",
                lam_hi + 1
            )));
        }
        let t_pow = (self.sp.t as f64).powi(-delta as i32);
        let sign = if delta % 2 == 0 { 1.0 } else { -1.0 };
        Ok(-sign * t_pow * (1.0 + a * a) * ip)
    }

    /// The rescaled L-kernel: `a^{2(k1-k2)} (C1 + C2 + C3)` at `delta = 0`;
    /// converges to the tacnode GUE-minor kernel as `t` grows.
    pub fn scaled_l(&self, u1: i64, k1: i64, u2: i64, k2: i64) -> Result<f64> {
        let a = self.a();
        let c1 = self.c1(0, u1, k1, u2, k2)?;
        let c2 = self.c2(0, u1, k1, u2, k2)?;
        let c3 = self.c3(0, u1, k1, u2, k2)?;
        Ok(a.powi((2 * (k1 - k2)) as i32) * (c1 + c2 + c3))
    }

    /// The rescaled, thinned K-kernel:
    /// `sqrt(t) * 2/(1+a^2) * a^{2(k2-k1)} (C1+C2+C3)_{delta=1}(u2+1,k2;u1,k1)`;
    /// converges to `K^tac(u2+1, y2; u1, y1)`.
    pub fn scaled_k(&self, u1: i64, k1: i64, u2: i64, k2: i64) -> Result<f64> {
        let a = self.a();
        let c1 = self.c1(1, u2 + 1, k2, u1, k1)?;
        let c2 = self.c2(1, u2 + 1, k2, u1, k1)?;
        let c3 = self.c3(1, u2 + 1, k2, u1, k1)?;
        Ok(self.rt() * 2.0 / (1.0 + a * a) * a.powi((2 * (k2 - k1)) as i32) * (c1 + c2 + c3))
    }

    /// Limiting value the rescaled L-kernel converges to.
    pub fn tacnode_target(&self, lk: &LimitKernels, u1: i64, y1: f64, u2: i64, y2: f64) -> Result<f64> {
        lk.tacnode(&self.sp.tacnode(), u1, y1, u2, y2)
    }
}

// ---------------------------------------------------------------------------
// Estimate checks of the convergence lemma.
// ---------------------------------------------------------------------------

/// Sampled verification of the three bounds behind the convergence proof.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EstBoundsReport {
    /// max over samples of `bound - |F|` (negative when the bound holds).
    pub fest_margin: f64,
    /// fitted constant in `|G/g - 1| <= C/sqrt(t)`.
    pub gest_c: f64,
    /// fitted constant in `|F_0/f - 1| <= C/sqrt(t)`.
    pub fest2_c: f64,
}

/// `|F_{x,t}(beta + i s)|` for real scaled coordinate `x` (real powers).
fn f_abs(a: f64, t: f64, x: f64, zeta: Complexd) -> f64 {
    let rt = t.sqrt();
    let b1 = (Complexd::new(1.0 / a, 0.0) - zeta / rt).norm();
    let b2 = (Complexd::new(a, 0.0) + zeta / rt).norm();
    ((t + x * rt) * b1.ln() + (t - x * rt) * b2.ln()).exp()
}

pub fn est_bounds_check(beta: f64, t: i64, k: u32, x_range: (f64, f64)) -> EstBoundsReport {
    let tf = t as f64;
    let a = 1.0 - beta / tf.sqrt();
    let mut fact = 1.0;
    for i in 1..=k {
        fact *= i as f64;
    }
    // (Fest): 1/|F_{x,t}(beta+is)| <= 1/(1 + s^{2k}/(2^k k!)) on the line.
    let mut fest_margin = f64::NEG_INFINITY;
    for xi in 0..=8 {
        let x = x_range.0 + (x_range.1 - x_range.0) * xi as f64 / 8.0;
        for si in 0..=80 {
            let s = -10.0 + 20.0 * si as f64 / 80.0;
            let f = f_abs(a, tf, x, Complexd::new(beta, s));
            let bound = 1.0 + s.powi(2 * k as i32) / (2f64.powi(k as i32) * fact);
            fest_margin = fest_margin.max(1.0 / f - 1.0 / bound);
        }
    }
    // Sample nodes on the unit circle and the short vertical segment.
    let nodes: Vec<Complexd> = (0..24)
        .map(|j| Complexd::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 24.0))
        .chain((0..9).map(|j| Complexd::new(beta, -2.0 + 0.5 * j as f64)))
        .collect();
    let rt = tf.sqrt();
    let mut gest_c = 0.0f64;
    let mut fest2_c = 0.0f64;
    for &zeta in &nodes {
        for xi in 0..=4 {
            let x = x_range.0 + (x_range.1 - x_range.0) * xi as f64 / 4.0;
            let ratio = (Complexd::new(1.0 / a, 0.0) - zeta / rt)
                / (Complexd::new(a, 0.0) + zeta / rt);
            let g_big = (Complexd::new(x * rt, 0.0) * ratio.ln()).exp();
            let g_small = (2.0 * x * (Complexd::new(beta, 0.0) - zeta)).exp();
            gest_c = gest_c.max((g_big / g_small - 1.0).norm() * rt);
        }
        let f0 = (Complexd::new(tf, 0.0)
            * ((Complexd::new(1.0 / a, 0.0) - zeta / rt) * (Complexd::new(a, 0.0) + zeta / rt))
                .ln())
        .exp();
        let f_beta = (2.0 * beta * zeta - zeta * zeta).exp();
        fest2_c = fest2_c.max((f0 / f_beta - 1.0).norm() * rt);
    }
    EstBoundsReport {
        fest_margin,
        gest_c,
        fest2_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::finite::ExactKernel;

    #[test]
    fn prefactor_special_cases() {
        // u1 = u2, y1 = y2, delta = 0: just sqrt(t).
        assert_eq!(prefactor_f(9, 0, 2, 1, 2, 1, 0.8), 3.0);
        // delta = 1 flips the sign and one power of sqrt(t).
        assert_eq!(prefactor_f(9, 1, 2, 1, 2, 1, 0.8), -1.0 / 3.0);
        let f = prefactor::<Rat>(
            &Rat::new(5.into(), 6.into()),
            Rat::from_integer(3.into()),
            0,
            2,
            1,
            2,
            1,
        );
        assert_eq!(f, Rat::from_integer(3.into()));
    }

    #[test]
    fn c1_closed_forms() {
        // C^(1) with y1 = y2 and u2 = u1 - 1 equals -a exactly.
        let sp = ScalingParams::new(9, 0, Rat::new(1.into(), 2.into()), 2).unwrap();
        let p = sp.diamond().unwrap();
        let kernel = ExactKernel::exact(&p).unwrap();
        let a = p.a_rational().unwrap();
        let (c1, _, _) = c_terms_direct(&kernel, &sp, 0, 3, 1, 2, 1).unwrap();
        assert_eq!(c1, -a);
        // C^(1) = 0 when y1 > y2 (contour deformable to -1/a).
        let (c1, _, _) = c_terms_direct(&kernel, &sp, 0, 3, 2, 2, 1).unwrap();
        assert!(c1.is_zero());
    }

    #[test]
    fn est_bounds_hold_at_large_t() {
        let report = est_bounds_check(0.5, 400, 2, (-10.0, 10.0));
        assert!(
            report.fest_margin <= 1e-12,
            "Fest violated by {}",
            report.fest_margin
        );
        // Fitted constants stay bounded under t-doubling.
        let r2 = est_bounds_check(0.5, 800, 2, (-10.0, 10.0));
        assert!(r2.gest_c < 2.0 * report.gest_c.max(1.0));
        assert!(r2.fest2_c < 2.0 * report.fest2_c.max(1.0));
    }
}
