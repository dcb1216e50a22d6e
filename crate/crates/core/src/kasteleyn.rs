//! Kasteleyn linear algebra for the double Aztec diamond.
//!
//! The matrix is indexed (black, white) with entries `±1` on `e1`-edges and
//! `∓ a i` on `e2`-edges, signs chosen per row parity so that every face
//! product is negative (the Kasteleyn orientation). `|det K_a|` is the
//! weighted tiling count; the inverse comes either from a dense solve or
//! entrywise from the K-kernel / Eynard-Mehta formulas, and Kenyon's
//! theorem turns inverse entries into dimer correlations.

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::kernels::finite::{Evaluator, FiniteKernel};
use crate::linalg;
use crate::region::{DualGraph, KasteleynCoord, E1, E2};
use crate::scalar::{neg_one_pow, Coeff, Gaussian};
use crate::{Complexd, Rat};

/// Dense Kasteleyn matrix over the Gaussian extension of the scalar `V`.
pub struct KasteleynMatrix<V> {
    /// entries[black][white]
    pub entries: Vec<Vec<Gaussian<V>>>,
}

/// Entry of the Kasteleyn matrix for the (black, white) pair, zero when the
/// squares are not adjacent.
pub fn ka_entry<V: Coeff>(b: KasteleynCoord, w: KasteleynCoord, a: &V) -> Gaussian<V> {
    let d = (w.xi - b.xi, w.eta - b.eta);
    let (alpha_vertical, plus) = match d {
        _ if d == E1 => (false, true),
        _ if d == (-E1.0, -E1.1) => (false, false),
        _ if d == E2 => (true, true),
        _ if d == (-E2.0, -E2.1) => (true, false),
        _ => return Gaussian::zero(),
    };
    let exp = if plus {
        (b.xi + b.eta + 1).div_euclid(2)
    } else {
        (b.xi + b.eta - 1).div_euclid(2)
    };
    let sign = neg_one_pow::<V>(exp);
    if alpha_vertical {
        // alpha(2) = -a i
        Gaussian::new(V::zero(), -(sign * a.clone()))
    } else {
        Gaussian::real(sign)
    }
}

pub fn build_ka<V: Coeff>(g: &DualGraph, a: &V) -> KasteleynMatrix<V> {
    let nb = g.num_blacks();
    let nw = g.num_whites();
    let mut entries = vec![vec![Gaussian::zero(); nw]; nb];
    for &(bi, wi) in g.edges.iter() {
        entries[bi][wi] = ka_entry(g.blacks[bi], g.whites[wi], a);
    }
    KasteleynMatrix { entries }
}

/// Check the Kasteleyn orientation: the product of the four entries around
/// every interior face is a negative real.
pub fn face_products_negative<V: Coeff>(g: &DualGraph, ka: &KasteleynMatrix<V>) -> Result<()>
where
    V: crate::contour::laurent::CoeffToF64,
{
    for corner in crate::sampler::interior_corners(g) {
        let cells = [
            (corner.0 + 1, corner.1),
            (corner.0 - 1, corner.1),
            (corner.0, corner.1 + 1),
            (corner.0, corner.1 - 1),
        ];
        let mut blacks = Vec::new();
        let mut whites = Vec::new();
        for (x, y) in cells {
            let k = KasteleynCoord::new(x, y);
            if let Some(b) = g.black_id(k) {
                blacks.push(b);
            } else if let Some(w) = g.white_id(k) {
                whites.push(w);
            }
        }
        let mut prod = Gaussian::<V>::one();
        for &b in &blacks {
            for &w in &whites {
                prod = prod * ka.entries[b][w].clone();
            }
        }
        if !prod.im.is_zero() || prod.re.to_f64() >= 0.0 {
            return Err(Error::InvalidParams(format!(
                "face product at corner {corner:?} is not negative real"
            )));
        }
    }
    Ok(())
}

/// Exact determinant of the Kasteleyn matrix over Q(i).
pub fn det_ka_exact(g: &DualGraph) -> Result<Gaussian<Rat>> {
    let a = g.params.a_rational()?;
    let ka = build_ka(g, &a);
    Ok(linalg::determinant(&ka.entries))
}

/// `|det K_a|` as an exact rational. The determinant of this model is
/// purely real or purely imaginary (checked), so the modulus is rational.
pub fn partition_function_exact(g: &DualGraph) -> Result<Rat> {
    let det = det_ka_exact(g)?;
    let re_abs = if det.re.to_f64() < 0.0 { -det.re.clone() } else { det.re.clone() };
    let im_abs = if det.im.to_f64() < 0.0 { -det.im.clone() } else { det.im.clone() };
    if !det.re.is_zero() && !det.im.is_zero() {
        return Err(Error::InvalidParams(
            "Kasteleyn determinant is neither purely real nor purely imaginary".into(),
        ));
    }
    Ok(re_abs + im_abs)
}

use crate::contour::laurent::CoeffToF64;

/// Floating-point Kasteleyn matrix as a nalgebra complex matrix.
pub fn ka_complex(g: &DualGraph) -> DMatrix<Complexd> {
    let a = g.params.a_value();
    let nb = g.num_blacks();
    DMatrix::from_fn(nb, nb, |bi, wi| {
        let e = ka_entry(g.blacks[bi], g.whites[wi], &a);
        Complexd::new(e.re, e.im)
    })
}

/// `|det K_a|` in floating point.
pub fn partition_function_f64(g: &DualGraph) -> f64 {
    ka_complex(g).lu().determinant().norm()
}

/// Dense inverse `K_a^{-1}(w, b)`, indexed (white, black).
pub fn inverse_solve(g: &DualGraph) -> Result<DMatrix<Complexd>> {
    ka_complex(g)
        .lu()
        .try_inverse()
        .ok_or(Error::Singular {
            context: "Kasteleyn matrix",
            cond: f64::INFINITY,
        })
}

/// Which entrywise formula the inverse is computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InverseRoute {
    /// Finite Eynard-Mehta form `f~_1 + f~_2` (exactly finite sums).
    EynardMehta,
    /// Through the K-kernel of Theorem 1.2 (resolvent form).
    KKernel,
}

/// Entrywise inverse Kasteleyn matrix from the kernel formulas,
/// indexed (white, black).
pub fn inverse_formula<E: Evaluator>(
    g: &DualGraph,
    kernel: &FiniteKernel<E>,
    route: InverseRoute,
) -> Result<Vec<Vec<Gaussian<E::V>>>> {
    let nw = g.num_whites();
    let nb = g.num_blacks();
    let mut out = vec![vec![Gaussian::zero(); nb]; nw];
    for wi in 0..nw {
        let w = (g.whites[wi].xi, g.whites[wi].eta);
        for bi in 0..nb {
            let b = (g.blacks[bi].xi, g.blacks[bi].eta);
            out[wi][bi] = match route {
                InverseRoute::EynardMehta => kernel.em_inverse_entry(w, b)?,
                InverseRoute::KKernel => kernel.k_inverse_entry(w, b)?,
            };
        }
    }
    Ok(out)
}

/// Kenyon's formula: probability that the listed distinct edges are all
/// covered, `det[ K(b_i, w_i) K^{-1}(w_i, b_j) ]`.
pub fn dimer_correlation(
    g: &DualGraph,
    kinv: &DMatrix<Complexd>,
    edges: &[(usize, usize)],
) -> f64 {
    let a = g.params.a_value();
    let k = edges.len();
    let m = DMatrix::from_fn(k, k, |i, j| {
        let (bi, wi) = edges[i];
        let (bj, _) = edges[j];
        let e = ka_entry(g.blacks[bi], g.whites[wi], &a);
        Complexd::new(e.re, e.im) * kinv[(wi, bj)]
    });
    m.lu().determinant().re
}

/// Boundary classes of black vertices from the case analysis of the
/// inverse-Kasteleyn identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum BlackClass {
    Interior,
    LeftBoundary,
    BottomBoundary,
    TopBoundary,
    SpecialPoint,
}

pub fn classify_black(g: &DualGraph, b: KasteleynCoord) -> BlackClass {
    let n = g.params.n;
    if b.xi == 2 * n && b.eta == 2 * n - 1 {
        BlackClass::SpecialPoint
    } else if b.xi == 0 {
        BlackClass::LeftBoundary
    } else if b.eta == -1 {
        BlackClass::BottomBoundary
    } else if b.eta == 2 * n - 1 && b.xi >= 2 * n + 2 {
        BlackClass::TopBoundary
    } else {
        BlackClass::Interior
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CaseReport {
    pub class: BlackClass,
    pub rows_checked: usize,
    pub max_residual: f64,
    pub first_failure: Option<(i64, i64, i64, i64)>,
}

/// Verify `K_a · C = I` row by row, where `C` is the entrywise inverse from
/// the Eynard-Mehta form, grouped by boundary class of the row's black
/// vertex. `tol` is the per-entry residual threshold.
pub fn verify_identity_cases<E: Evaluator>(
    g: &DualGraph,
    kernel: &FiniteKernel<E>,
    tol: f64,
) -> Result<Vec<CaseReport>> {
    let c = inverse_formula(g, kernel, InverseRoute::EynardMehta)?;
    let a = kernel.evaluator().weight();
    let mut reports: Vec<CaseReport> = Vec::new();
    for (bi, b) in g.blacks.iter().enumerate() {
        let class = classify_black(g, *b);
        for (yi, y) in g.blacks.iter().enumerate() {
            let mut acc = Gaussian::<E::V>::zero();
            for &wi in &g.adj[bi] {
                let e = ka_entry(*b, g.whites[wi], &a);
                acc = acc + e * c[wi][yi].clone();
            }
            let expect = if bi == yi {
                Gaussian::one()
            } else {
                Gaussian::zero()
            };
            let diff = acc - expect;
            let residual = diff.re.to_f64().hypot(diff.im.to_f64());
            let entry = reports.iter_mut().find(|r| r.class == class);
            let report = match entry {
                Some(r) => r,
                None => {
                    reports.push(CaseReport {
                        class,
                        rows_checked: 0,
                        max_residual: 0.0,
                        first_failure: None,
                    });
                    reports.last_mut().unwrap()
                }
            };
            if residual > report.max_residual {
                report.max_residual = residual;
            }
            if residual > tol && report.first_failure.is_none() {
                report.first_failure = Some((b.xi, b.eta, y.xi, y.eta));
            }
        }
        let class_report = reports.iter_mut().find(|r| r.class == class).unwrap();
        class_report.rows_checked += 1;
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{build_region, DiamondParams};
    use crate::tiling::{domino_type, enumerate_tilings, enumerate_weighted_sum};

    fn graph(n: i64, rho: i64, num: i64, den: i64) -> DualGraph {
        let p = DiamondParams::with_rational_a(n, rho, num, den).unwrap();
        build_region(&p).unwrap()
    }

    #[test]
    fn face_products_and_sparsity() {
        let g = graph(4, 2, 1, 2);
        let a = g.params.a_rational().unwrap();
        let ka = build_ka(&g, &a);
        face_products_negative(&g, &ka).unwrap();
        for (bi, row) in ka.entries.iter().enumerate() {
            let nonzero = row.iter().filter(|e| !e.is_zero()).count();
            assert_eq!(nonzero, g.adj[bi].len());
        }
    }

    #[test]
    fn determinant_counts_tilings_exactly() {
        // a = 1: |det K| = number of tilings; a = 1/2: weighted sum.
        for (n, rho, num, den) in [(2, 2, 1, 1), (2, 2, 1, 2), (4, 2, 1, 1), (4, 2, 1, 2)] {
            let g = graph(n, rho, num, den);
            let z = enumerate_weighted_sum(&g).unwrap();
            let pf = partition_function_exact(&g).unwrap();
            assert_eq!(pf, z, "n={n} rho={rho} a={num}/{den}");
        }
    }

    #[test]
    fn phase_invariance_of_modulus() {
        let g = graph(2, 2, 1, 2);
        let m = ka_complex(&g);
        let phase = Complexd::from_polar(1.0, 0.7);
        let scaled = m.map(|e| e * phase);
        let d1 = m.lu().determinant().norm();
        let d2 = scaled.lu().determinant().norm();
        assert!((d1 - d2).abs() < 1e-9 * d1.max(1.0));
    }

    #[test]
    fn kenyon_single_edges_sum_to_one_per_white() {
        let g = graph(4, 2, 1, 2);
        let kinv = inverse_solve(&g).unwrap();
        for wi in 0..g.num_whites() {
            let mut total = 0.0;
            for &bi in &g.adj_white[wi] {
                total += dimer_correlation(&g, &kinv, &[(bi, wi)]);
            }
            assert!((total - 1.0).abs() < 1e-10, "white {wi}: {total}");
        }
    }

    #[test]
    fn kenyon_matches_enumeration() {
        let g = graph(2, 2, 1, 2);
        let kinv = inverse_solve(&g).unwrap();
        let z = crate::scalar::rat_to_f64(&enumerate_weighted_sum(&g).unwrap());
        // Single-edge probabilities against brute force.
        for &(bi, wi) in g.edges.iter() {
            let mut hit = 0.0;
            enumerate_tilings(&g, |t| {
                if t.contains_edge(bi, wi) {
                    hit += crate::tiling::weight_f64(&g, t);
                }
            })
            .unwrap();
            let p_enum = hit / z;
            let p_kenyon = dimer_correlation(&g, &kinv, &[(bi, wi)]);
            assert!(
                (p_enum - p_kenyon).abs() < 1e-10,
                "edge ({bi},{wi}): {p_enum} vs {p_kenyon}"
            );
        }
        let _ = domino_type;
    }
}
