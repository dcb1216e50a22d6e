//! Trapezoidal quadrature on circles and truncated vertical lines.
//!
//! On a circle the trapezoidal rule converges geometrically for integrands
//! analytic in an annulus around the contour; on a vertical line the same
//! holds once the integrand decays like a Gaussian, because all
//! Euler-Maclaurin boundary terms vanish at the truncation points. Node
//! counts are doubled until two successive evaluations agree to tolerance.
//!
//! The core is generic over the float scalar; the crate instantiates it at
//! `f64` everywhere (`f32` cannot reach the tolerances the identity suite
//! runs at, but the code does not care).

use num_complex::Complex;
use num_traits::{Float, FloatConst};

use crate::error::{Error, Result};

/// Positively oriented circle.
#[derive(Clone, Copy, Debug)]
pub struct CircleContour<T> {
    pub center: Complex<T>,
    pub radius: T,
}

/// Upward vertical line `real_part + i s`, truncated to `|s| <= half_height`.
#[derive(Clone, Copy, Debug)]
pub struct TruncatedLine<T> {
    pub real_part: T,
    pub half_height: T,
}

#[derive(Clone, Copy, Debug)]
pub enum ContourSpec<T> {
    Circle(CircleContour<T>),
    Line(TruncatedLine<T>),
}

impl<T: Float + FloatConst> CircleContour<T> {
    pub fn new(center: Complex<T>, radius: T) -> Self {
        CircleContour { center, radius }
    }

    pub fn origin(radius: T) -> Self {
        CircleContour {
            center: Complex::new(T::zero(), T::zero()),
            radius,
        }
    }

    /// Nodes and weights such that `(1/2πi) ∮ f dz ≈ Σ w_j f(z_j)`.
    fn nodes(&self, n: usize) -> impl Iterator<Item = (Complex<T>, Complex<T>)> + '_ {
        let nf = T::from(n).unwrap();
        (0..n).map(move |j| {
            let theta = T::from(2.0).unwrap() * T::PI() * T::from(j).unwrap() / nf;
            let dir = Complex::from_polar(self.radius, theta);
            (self.center + dir, dir / nf)
        })
    }
}

impl<T: Float + FloatConst> TruncatedLine<T> {
    pub fn new(real_part: T, half_height: T) -> Self {
        TruncatedLine {
            real_part,
            half_height,
        }
    }

    /// Nodes and weights such that `(1/2πi) ∫ f dω ≈ Σ w_j f(ω_j)`
    /// (the measure is `i ds`, so weights are real `h/2π` with trapezoid
    /// halving at the truncation endpoints).
    fn nodes(&self, n: usize) -> impl Iterator<Item = (Complex<T>, Complex<T>)> + '_ {
        let two = T::from(2.0).unwrap();
        let h = two * self.half_height / T::from(n).unwrap();
        let base = h / (two * T::PI());
        (0..=n).map(move |j| {
            let s = -self.half_height + h * T::from(j).unwrap();
            let w = if j == 0 || j == n {
                base / two
            } else {
                base
            };
            (
                Complex::new(self.real_part, s),
                Complex::new(w, T::zero()),
            )
        })
    }
}

impl<T: Float + FloatConst> ContourSpec<T> {
    fn nodes(&self, n: usize) -> Vec<(Complex<T>, Complex<T>)> {
        match self {
            ContourSpec::Circle(c) => c.nodes(n).collect(),
            ContourSpec::Line(l) => l.nodes(n).collect(),
        }
    }

    /// Minimal distance of the contour from a point, used for collision checks.
    pub fn distance_to(&self, p: Complex<T>) -> T {
        match self {
            ContourSpec::Circle(c) => ((p - c.center).norm() - c.radius).abs(),
            ContourSpec::Line(l) => (p.re - l.real_part).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub start_nodes: usize,
    pub max_nodes: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts {
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            start_nodes: 64,
            max_nodes: 1 << 18,
        }
    }
}

impl QuadOpts {
    pub fn with_tol(tol: f64) -> Self {
        QuadOpts {
            rel_tol: tol,
            // Roundoff floor: successive trapezoid sums of O(1) integrands
            // jitter at a few ulps even when fully converged.
            abs_tol: (tol * 1e-3).max(2e-14),
            ..Default::default()
        }
    }

    fn accepted(&self, prev: Complex<f64>, cur: Complex<f64>) -> bool {
        let err = (cur - prev).norm();
        err <= self.rel_tol * cur.norm().max(1e-300) || err <= self.abs_tol
    }
}

/// Converged quadrature value with its achieved error estimate.
#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: Complex<f64>,
    pub est_error: f64,
    pub nodes: usize,
}

fn check_finite(v: Complex<f64>, what: &'static str) -> Result<()> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `(1/2πi) ∮ f dz` over a circle, node-doubling trapezoid.
pub fn integrate_circle<F>(f: F, contour: &CircleContour<f64>, opts: &QuadOpts) -> Result<Quad>
where
    F: Fn(Complex<f64>) -> Complex<f64>,
{
    integrate_spec(&f, &ContourSpec::Circle(*contour), opts)
}

fn integrate_spec<F>(f: &F, spec: &ContourSpec<f64>, opts: &QuadOpts) -> Result<Quad>
where
    F: Fn(Complex<f64>) -> Complex<f64>,
{
    let mut n = opts.start_nodes;
    let mut prev: Option<Complex<f64>> = None;
    loop {
        let mut acc = Complex::new(0.0, 0.0);
        for (z, w) in spec.nodes(n) {
            acc += f(z) * w;
        }
        check_finite(acc, "contour integral")?;
        if let Some(p) = prev {
            if opts.accepted(p, acc) {
                return Ok(Quad {
                    value: acc,
                    est_error: (acc - p).norm(),
                    nodes: n,
                });
            }
        }
        if n >= opts.max_nodes {
            return Err(Error::QuadratureNonConvergence {
                nodes: n,
                prev: prev.unwrap_or(acc),
                last: acc,
            });
        }
        prev = Some(acc);
        n *= 2;
    }
}

/// Pick the truncation height so the integrand is negligible at the ends,
/// verifying Gaussian-type decay by sampling.
fn adapt_line_height<F>(f: &F, line: &TruncatedLine<f64>, opts: &QuadOpts) -> Result<TruncatedLine<f64>>
where
    F: Fn(Complex<f64>) -> Complex<f64>,
{
    let mut t = line.half_height;
    // Scale reference: largest magnitude on a coarse sweep of the segment.
    let mut scale: f64 = 1e-300;
    for j in 0..33 {
        let s = -t + 2.0 * t * (j as f64) / 32.0;
        scale = scale.max(f(Complex::new(line.real_part, s)).norm());
    }
    let cutoff = (opts.abs_tol.min(opts.rel_tol) * 1e-2).max(1e-300);
    loop {
        let hi = f(Complex::new(line.real_part, t)).norm();
        let lo = f(Complex::new(line.real_part, -t)).norm();
        if hi <= scale * cutoff && lo <= scale * cutoff {
            return Ok(TruncatedLine::new(line.real_part, t));
        }
        if t > 64.0 {
            return Err(Error::DecayCheckFailed {
                at: t,
                magnitude: hi.max(lo) / scale,
            });
        }
        t *= 1.5;
    }
}

/// `(1/2πi) ∫_L f dω` on an upward truncated vertical line whose integrand
/// decays like a Gaussian; the truncation height is adapted and checked.
pub fn integrate_gaussian_line<F>(f: F, line: &TruncatedLine<f64>, opts: &QuadOpts) -> Result<Quad>
where
    F: Fn(Complex<f64>) -> Complex<f64>,
{
    let line = adapt_line_height(&f, line, opts)?;
    integrate_spec(&f, &ContourSpec::Line(line), opts)
}

/// Default truncation height for a unit-Gaussian tail at tolerance `tol`.
pub fn gaussian_half_height(tol: f64) -> f64 {
    (2.0 * (1.0 / tol).ln()).sqrt().max(6.0)
}

/// Separated double contour integral
///
/// ```text
/// (1/2πi)^2 ∮_outer dy f_out(y) ∮_inner dx f_in(x) · sign/(x - y)
/// ```
///
/// The integrand must factor as `f_in(x) f_out(y)` apart from the Cauchy
/// coupling, which is what every kernel in this crate looks like; the cross
/// sum then costs `N_in + N_out` integrand evaluations plus `N_in · N_out`
/// divides. Contours must not touch (their gap is the analyticity margin of
/// the Cauchy factor).
pub fn integrate_double<FI, FO>(
    f_in: FI,
    f_out: FO,
    inner: &ContourSpec<f64>,
    outer: &ContourSpec<f64>,
    sign: f64,
    opts: &QuadOpts,
) -> Result<Quad>
where
    FI: Fn(Complex<f64>) -> Complex<f64>,
    FO: Fn(Complex<f64>) -> Complex<f64>,
{
    check_separation(inner, outer)?;
    let inner = adapt_if_line(&f_in, inner, opts)?;
    let outer = adapt_if_line(&f_out, outer, opts)?;

    let mut n = opts.start_nodes;
    let mut prev: Option<Complex<f64>> = None;
    loop {
        let xi: Vec<_> = inner
            .nodes(n)
            .into_iter()
            .map(|(x, w)| (x, f_in(x) * w))
            .collect();
        let yo: Vec<_> = outer
            .nodes(n)
            .into_iter()
            .map(|(y, w)| (y, f_out(y) * w))
            .collect();
        let mut acc = Complex::new(0.0, 0.0);
        for &(y, fy) in &yo {
            if fy.norm_sqr() == 0.0 {
                continue;
            }
            let mut row = Complex::new(0.0, 0.0);
            for &(x, fx) in &xi {
                row += fx / (x - y);
            }
            acc += fy * row;
        }
        acc *= sign;
        check_finite(acc, "double contour integral")?;
        if let Some(p) = prev {
            if opts.accepted(p, acc) {
                return Ok(Quad {
                    value: acc,
                    est_error: (acc - p).norm(),
                    nodes: n,
                });
            }
        }
        if n >= opts.max_nodes / 8 {
            return Err(Error::QuadratureNonConvergence {
                nodes: n,
                prev: prev.unwrap_or(acc),
                last: acc,
            });
        }
        prev = Some(acc);
        n *= 2;
    }
}

fn adapt_if_line<F>(f: &F, spec: &ContourSpec<f64>, opts: &QuadOpts) -> Result<ContourSpec<f64>>
where
    F: Fn(Complex<f64>) -> Complex<f64>,
{
    match spec {
        ContourSpec::Circle(c) => Ok(ContourSpec::Circle(*c)),
        ContourSpec::Line(l) => Ok(ContourSpec::Line(adapt_line_height(f, l, opts)?)),
    }
}

fn check_separation(a: &ContourSpec<f64>, b: &ContourSpec<f64>) -> Result<()> {
    let (separation, scale) = match (a, b) {
        (ContourSpec::Circle(c1), ContourSpec::Circle(c2)) => {
            let d = (c1.center - c2.center).norm();
            // Concentric or nested circles: the gap between the curves.
            let gap = if d + c1.radius.min(c2.radius) <= c1.radius.max(c2.radius) {
                c1.radius.max(c2.radius) - d - c1.radius.min(c2.radius)
            } else {
                d - c1.radius - c2.radius
            };
            (gap, c1.radius.max(c2.radius))
        }
        (ContourSpec::Circle(c), ContourSpec::Line(l))
        | (ContourSpec::Line(l), ContourSpec::Circle(c)) => {
            ((l.real_part - c.center.re).abs() - c.radius, c.radius)
        }
        (ContourSpec::Line(l1), ContourSpec::Line(l2)) => {
            ((l1.real_part - l2.real_part).abs(), 1.0)
        }
    };
    let margin = 0.1 * scale;
    if separation < margin {
        Err(Error::ContourCollision { separation, margin })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cauchy_one_over_z() {
        let contour = CircleContour::origin(1.0);
        let q = integrate_circle(|z| 1.0 / z, &contour, &QuadOpts::default()).unwrap();
        assert!((q.value - c(1.0, 0.0)).norm() < 1e-13);
        // z^k, k != -1, integrates to zero.
        for k in [-3i32, 0, 2] {
            let q = integrate_circle(|z| z.powi(k), &contour, &QuadOpts::default()).unwrap();
            assert!(q.value.norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn off_center_simple_poles() {
        // f = (1+z/2)/((z-1/2) z) over a circle of radius 3/4 about 0
        // encloses 0 and 1/2: residues -2 and 5/2, total 1/2.
        let contour = CircleContour::origin(0.75);
        let q = integrate_circle(
            |z| (1.0 + z / 2.0) / ((z - 0.5) * z),
            &contour,
            &QuadOpts::default(),
        )
        .unwrap();
        assert!((q.value - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gaussian_line_closed_form() {
        // (1/2πi) ∫_L e^{ω²} dω on Re ω = 1/2 equals 1/(2√π) e^{-0/4}…
        // generally ∫ e^{pω²+qω} dω/(2πi) = e^{-q²/4p}/(2√(πp)); here p=1,q=0.
        let line = TruncatedLine::new(0.5, 6.0);
        let q = integrate_gaussian_line(|w| (w * w).exp(), &line, &QuadOpts::default()).unwrap();
        let expect = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
        assert!((q.value - c(expect, 0.0)).norm() < 1e-12);
        // Cauchy shift invariance: the value must not depend on the
        // real part when no pole is crossed.
        let line2 = TruncatedLine::new(1.5, 6.0);
        let q2 = integrate_gaussian_line(|w| (w * w).exp(), &line2, &QuadOpts::default()).unwrap();
        assert!((q.value - q2.value).norm() < 1e-10);
    }

    #[test]
    fn double_integral_geometric_series() {
        // Same pair as the exact-engine test: 1/((w-z)z) = 1, 1/((w-z)w) = 0,
        // with z on |z|=1/2 and w on |w|=2.
        let inner = ContourSpec::Circle(CircleContour::origin(0.5));
        let outer = ContourSpec::Circle(CircleContour::origin(2.0));
        let q = integrate_double(
            |z| 1.0 / z,
            |_w| c(1.0, 0.0),
            &inner,
            &outer,
            -1.0,
            &QuadOpts::default(),
        )
        .unwrap();
        assert!((q.value - c(1.0, 0.0)).norm() < 1e-12);
        let q = integrate_double(
            |_z| c(1.0, 0.0),
            |w| 1.0 / w,
            &inner,
            &outer,
            -1.0,
            &QuadOpts::default(),
        )
        .unwrap();
        assert!(q.value.norm() < 1e-12);
    }

    #[test]
    fn collision_detected() {
        let inner = ContourSpec::Circle(CircleContour::origin(1.0));
        let outer = ContourSpec::Circle(CircleContour::origin(1.05));
        let r = integrate_double(
            |_| c(1.0, 0.0),
            |_| c(1.0, 0.0),
            &inner,
            &outer,
            1.0,
            &QuadOpts::default(),
        );
        assert!(matches!(r, Err(Error::ContourCollision { .. })));
    }

    #[test]
    fn decay_check_failure() {
        // A non-decaying integrand must be rejected, not integrated.
        let line = TruncatedLine::new(1.0, 6.0);
        let r = integrate_gaussian_line(|_| c(1.0, 0.0), &line, &QuadOpts::default());
        assert!(matches!(r, Err(Error::DecayCheckFailed { .. })));
    }
}
