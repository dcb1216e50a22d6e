//! Contour integration: spectral trapezoid quadrature and the exact
//! residue engine, plus the standard contours of the model.

pub mod laurent;
pub mod quad;

pub use laurent::{ExactDouble, LaurentExpr, Pole};
pub use quad::{
    gaussian_half_height, integrate_circle, integrate_double, integrate_gaussian_line,
    CircleContour, ContourSpec, Quad, QuadOpts, TruncatedLine,
};

use crate::Complexd;

/// The contour Γ_{0,a}: a circle enclosing the poles `0` and `a` while
/// excluding `-1/a`. Centered at `a/2` so the construction works for every
/// `a > 0` including `a = 1`, where no origin-centered circle can separate
/// `{0, a}` from `-1/a`.
pub fn gamma_0a(a: f64) -> CircleContour<f64> {
    CircleContour::new(Complexd::new(a / 2.0, 0.0), a / 2.0 + 0.25 / a)
}

/// A strictly larger concentric circle, still excluding `-1/a`; used as the
/// contour that encloses Γ_{0,a} together with a point on it.
pub fn gamma_0a_outer(a: f64) -> CircleContour<f64> {
    CircleContour::new(Complexd::new(a / 2.0, 0.0), a / 2.0 + 0.75 / a)
}

/// Γ_0 for the limiting kernels: small circle around the origin.
pub fn gamma_0() -> CircleContour<f64> {
    CircleContour::origin(0.5)
}

/// The line `L = 0^+ + iR` of the limiting kernels, kept to the right of Γ_0.
pub fn line_l(tol: f64) -> TruncatedLine<f64> {
    TruncatedLine::new(1.0, gaussian_half_height(tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_contains_poles() {
        for a in [0.25, 0.5, 1.0, 1.5] {
            for c in [gamma_0a(a), gamma_0a_outer(a)] {
                let d0 = (Complexd::new(0.0, 0.0) - c.center).norm();
                let da = (Complexd::new(a, 0.0) - c.center).norm();
                let dneg = (Complexd::new(-1.0 / a, 0.0) - c.center).norm();
                assert!(d0 < c.radius && da < c.radius, "a={a}");
                assert!(dneg > c.radius, "a={a}");
            }
            assert!(gamma_0a_outer(a).radius > gamma_0a(a).radius);
        }
    }
}
