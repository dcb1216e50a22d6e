//! Limiting kernels at the tacnode: the GUE-minor kernel, the rank-rho
//! perturbation built from the functions K^beta, A, B, and the coupled
//! (tacnode) GUE-minor kernel.
//!
//! All objects are integrals over a small circle about the origin and an
//! upward vertical line strictly to its right, with Gaussian factors that
//! make the trapezoid rule spectrally accurate. As in the finite-size case
//! the operator `K^beta` on `l^2({-rho, ...})` has column support
//! `{-rho, ..., -1}` (its circle integrand is entire for nonnegative
//! powers), and `B` vanishes for indices `>= max(0, -u)`, so the resolvent
//! inner product is a rho x rho solve plus an exactly finite sum.

use crate::contour::{
    gamma_0, integrate_circle, integrate_double, integrate_gaussian_line, line_l, CircleContour,
    ContourSpec, QuadOpts, TruncatedLine,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::Complexd;

/// Parameters of the limiting kernel.
#[derive(Clone, Copy, Debug)]
pub struct TacnodeParams {
    pub beta: f64,
    pub rho: i64,
}

impl TacnodeParams {
    pub fn new(beta: f64, rho: i64) -> Result<Self> {
        if rho < 0 {
            return Err(Error::InvalidParams("rho must be nonnegative".into()));
        }
        Ok(TacnodeParams { beta, rho })
    }
}

/// `H^m(z) = z^{m-1}/(m-1)! 1_{z>=0}` for `m >= 1`; the boundary value at
/// `z = 0` uses the plain indicator.
pub fn h_m(m: i64, z: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidParams(format!("H^m needs m >= 1, got {m}")));
    }
    if z < 0.0 {
        return Ok(0.0);
    }
    let mut fact = 1.0;
    for i in 1..m {
        fact *= i as f64;
    }
    Ok(z.powi((m - 1) as i32) / fact)
}

/// Evaluator for the limiting kernels; contours are configurable so tests
/// can verify placement independence.
#[derive(Clone, Debug)]
pub struct LimitKernels {
    pub opts: QuadOpts,
    pub circle: CircleContour<f64>,
    pub line: TruncatedLine<f64>,
}

impl LimitKernels {
    pub fn new(tol: f64) -> Self {
        LimitKernels {
            opts: QuadOpts::with_tol(tol),
            circle: gamma_0(),
            line: line_l(tol),
        }
    }

    pub fn with_contours(tol: f64, circle_radius: f64, line_re: f64) -> Self {
        let mut lk = Self::new(tol);
        lk.circle = CircleContour::origin(circle_radius);
        lk.line = TruncatedLine::new(line_re, lk.line.half_height);
        lk
    }

    fn realify(&self, v: Complexd, err: f64) -> Result<f64> {
        let allow = (1e-8f64).max(err * 100.0).max(1e-8 * v.re.abs());
        if v.im.abs() > allow {
            return Err(Error::NonFinite("imaginary residue in a real kernel value"));
        }
        Ok(v.re)
    }

    fn circle_int<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(Complexd) -> Complexd,
    {
        let q = integrate_circle(&f, &self.circle, &self.opts)?;
        self.realify(q.value, q.est_error)
    }

    fn line_int<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(Complexd) -> Complexd,
    {
        let q = integrate_gaussian_line(&f, &self.line, &self.opts)?;
        self.realify(q.value, q.est_error)
    }

    /// Double integral with the inner variable on the line and the outer on
    /// the circle, Cauchy kernel `sign/(omega - zeta)`.
    fn line_circle_double<FL, FC>(&self, f_line: FL, f_circle: FC, sign: f64) -> Result<f64>
    where
        FL: Fn(Complexd) -> Complexd,
        FC: Fn(Complexd) -> Complexd,
    {
        let q = integrate_double(
            f_line,
            f_circle,
            &ContourSpec::Line(self.line),
            &ContourSpec::Circle(self.circle),
            sign,
            &self.opts,
        )?;
        self.realify(q.value, q.est_error)
    }

    // ----- helper functions of the factorized form --------------------------

    /// `G(lambda) = \int_L e^{2 w^2 - 4 b w} w^{-lambda-2} dw / (2 pi i)`.
    pub fn g_big(&self, beta: f64, lambda: i64) -> Result<f64> {
        self.line_int(|w| (2.0 * w * w - 4.0 * beta * w).exp() * w.powi((-lambda - 2) as i32))
    }

    /// `g_y(k) = \int_L e^{w^2 - 2(b-y) w} w^{-k-1} dw / (2 pi i)`.
    pub fn g_small(&self, beta: f64, y: f64, k: i64) -> Result<f64> {
        self.line_int(|w| (w * w - 2.0 * (beta - y) * w).exp() * w.powi((-k - 1) as i32))
    }

    /// `H(kappa) = \oint e^{-2 z^2 + 4 b z} z^{kappa} dz / (2 pi i)`;
    /// vanishes for `kappa >= 0`.
    pub fn h_big(&self, beta: f64, kappa: i64) -> Result<f64> {
        if kappa >= 0 {
            return Ok(0.0);
        }
        self.circle_int(|z| (-2.0 * z * z + 4.0 * beta * z).exp() * z.powi(kappa as i32))
    }

    /// `h_y(lambda) = \oint e^{-z^2 + 2(b-y) z} z^{lambda} dz / (2 pi i)`;
    /// vanishes for `lambda >= 0`.
    pub fn h_small(&self, beta: f64, y: f64, lambda: i64) -> Result<f64> {
        if lambda >= 0 {
            return Ok(0.0);
        }
        self.circle_int(|z| (-z * z + 2.0 * (beta - y) * z).exp() * z.powi(lambda as i32))
    }

    // ----- kernel ingredients ------------------------------------------------

    /// The GUE-minor kernel extended to integer levels of either sign.
    pub fn gue_minor(&self, n1: i64, x1: f64, n2: i64, x2: f64) -> Result<f64> {
        let mut total = 0.0;
        if n1 > n2 {
            total -= 2f64.powi((n1 - n2) as i32) * h_m(n1 - n2, x1 - x2)?;
        }
        let d = self.line_circle_double(
            |w| (w * w - 2.0 * w * x2).exp() * w.powi(n2 as i32),
            |z| (-z * z + 2.0 * z * x1).exp() * z.powi((-n1) as i32),
            1.0,
        )?;
        Ok(total + 2.0 * d)
    }

    /// `K^beta(lambda, kappa)`; zero for `kappa >= 0`.
    pub fn cal_k(&self, beta: f64, lambda: i64, kappa: i64) -> Result<f64> {
        if kappa >= 0 {
            return Ok(0.0);
        }
        self.line_circle_double(
            |w| (2.0 * w * w - 4.0 * beta * w).exp() * w.powi((-lambda - 1) as i32),
            |z| (-2.0 * z * z + 4.0 * beta * z).exp() * z.powi(kappa as i32),
            1.0,
        )
    }

    /// `A^{beta,y}_v(kappa)`: double integral plus a line integral.
    pub fn cal_a(&self, beta: f64, y: f64, v: i64, kappa: i64) -> Result<f64> {
        let d = self.line_circle_double(
            |w| (2.0 * w * w - 4.0 * beta * w).exp() * w.powi((-kappa - 1) as i32),
            |z| (-z * z - 2.0 * y * z).exp() * z.powi((-v) as i32),
            -1.0,
        )?;
        let s = self.line_int(|z| {
            (z * z - 2.0 * z * (y + 2.0 * beta)).exp() * z.powi((-(v + kappa + 1)) as i32)
        })?;
        Ok(d + s)
    }

    /// `B^{beta,y}_u(lambda)`: double integral plus a circle integral;
    /// vanishes for `lambda >= max(0, -u)`.
    pub fn cal_b(&self, beta: f64, y: f64, u: i64, lambda: i64) -> Result<f64> {
        let d = if lambda >= 0 {
            // The circle integrand is entire: no pole at the origin.
            0.0
        } else {
            self.line_circle_double(
                |w| (w * w + 2.0 * w * y).exp() * w.powi(u as i32),
                |z| (-2.0 * z * z + 4.0 * beta * z).exp() * z.powi(lambda as i32),
                -1.0,
            )?
        };
        let s = if u + lambda >= 0 {
            0.0
        } else {
            self.circle_int(|w| {
                (-w * w + 2.0 * w * (y + 2.0 * beta)).exp() * w.powi((u + lambda) as i32)
            })?
        };
        Ok(d + s)
    }

    // ----- the tacnode GUE-minor kernel --------------------------------------

    /// Resolvent block: `(I - K^beta)` restricted to the column support
    /// `{-rho, ..., -1}` of `K^beta` on `l^2({-rho, ...})`.
    fn resolvent_block(&self, tp: &TacnodeParams) -> Result<Vec<Vec<f64>>> {
        let rho = tp.rho;
        let size = rho as usize;
        let mut m = vec![vec![0.0; size]; size];
        for (i, lambda) in (-rho..0).enumerate() {
            for (j, kappa) in (-rho..0).enumerate() {
                let k = self.cal_k(tp.beta, lambda, kappa)?;
                m[i][j] = if i == j { 1.0 - k } else { -k };
            }
        }
        Ok(m)
    }

    /// The coupled GUE-minor kernel
    /// `K^tac(u1,y1;u2,y2) = K^minor(u1, b-y1; u2, b-y2) + 2 <(I-K)^{-1} A, B>`.
    pub fn tacnode(&self, tp: &TacnodeParams, u1: i64, y1: f64, u2: i64, y2: f64) -> Result<f64> {
        let beta = tp.beta;
        let rho = tp.rho;
        let minor = self.gue_minor(u1, beta - y1, u2, beta - y2)?;
        // B(lambda) vanishes for lambda >= max(0, -u2); empty perturbation
        // when the support cap is below -rho.
        let lam_hi = (-1).max(-1 - u2);
        if rho == 0 || lam_hi < -rho {
            return Ok(minor);
        }
        let a_vec: Vec<f64> = (-rho..=lam_hi.max(-1))
            .map(|k| self.cal_a(beta, y1 - beta, u1, k))
            .collect::<Result<_>>()?;
        let block = self.resolvent_block(tp)?;
        let a_s: Vec<f64> = a_vec[..rho as usize].to_vec();
        let xs = linalg::solve(&block, &[a_s])?.remove(0);
        let mut ip = 0.0;
        for lambda in -rho..=lam_hi {
            let b = self.cal_b(beta, y2 - beta, u2, lambda)?;
            if b == 0.0 {
                continue;
            }
            let mut x = self.cal_a(beta, y1 - beta, u1, lambda)?;
            for (j, kappa) in (-rho..0).enumerate() {
                x += self.cal_k(beta, lambda, kappa)? * xs[j];
            }
            ip += x * b;
        }
        // Finite-rank certificate: B vanishes past its support.
        let tail = self.cal_b(beta, y2 - beta, u2, lam_hi + 1)?;
        if tail.abs() > 1e-9 {
            return Err(Error::TruncationCertificate(format!(
                "B({}) = {tail:.3e} expected to vanish",
                lam_hi + 1
            )));
        }
        Ok(minor + 2.0 * ip)
    }

    /// The involution-image form: the same kernel evaluated through
    /// `(u1, y1; u2, y2) -> (rho - u2, -y2; rho - u1, -y1)`.
    pub fn tacnode_involuted(
        &self,
        tp: &TacnodeParams,
        u1: i64,
        y1: f64,
        u2: i64,
        y2: f64,
    ) -> Result<f64> {
        self.tacnode(tp, tp.rho - u2, -y2, tp.rho - u1, -y1)
    }
}
