//! Inverse Kasteleyn matrix: the entrywise kernel formula against the dense
//! solve, the exact identity on the smallest instance, and the case-by-case
//! verification of K_a · C = I.

use double_aztec::kasteleyn::{
    inverse_formula, inverse_solve, verify_identity_cases, InverseRoute,
};
use double_aztec::kernels::finite::{ExactKernel, FiniteKernel, QuadKernel};
use double_aztec::region::{build_region, DiamondParams};
use double_aztec::scalar::rat_to_f64;
use double_aztec::Complexd;

#[test]
fn em_formula_matches_dense_solve_n4() {
    for (num, den) in [(1i64, 1i64), (1, 2)] {
        let p = DiamondParams::with_rational_a(4, 2, num, den).unwrap();
        let g = build_region(&p).unwrap();
        let kernel = ExactKernel::exact(&p).unwrap();
        let formula = inverse_formula(&g, &kernel, InverseRoute::EynardMehta).unwrap();
        let solved = inverse_solve(&g).unwrap();
        let mut max_diff: f64 = 0.0;
        for wi in 0..g.num_whites() {
            for bi in 0..g.num_blacks() {
                let f = Complexd::new(
                    rat_to_f64(&formula[wi][bi].re),
                    rat_to_f64(&formula[wi][bi].im),
                );
                max_diff = max_diff.max((f - solved[(wi, bi)]).norm());
            }
        }
        println!("a={num}/{den}: max |formula - solve| = {max_diff:.3e}");
        assert!(max_diff < 1e-9);
    }
}

#[test]
fn k_kernel_route_matches_em_route() {
    let p = DiamondParams::with_rational_a(4, 2, 1, 2).unwrap();
    let g = build_region(&p).unwrap();
    let kernel = ExactKernel::exact(&p).unwrap();
    // Exact equality of the two routes on sampled entries.
    for (wi, bi) in [(0usize, 0usize), (3, 7), (10, 20), (31, 13), (17, 29)] {
        let w = (g.whites[wi].xi, g.whites[wi].eta);
        let b = (g.blacks[bi].xi, g.blacks[bi].eta);
        let em = kernel.em_inverse_entry(w, b).unwrap();
        let kk = kernel.k_inverse_entry(w, b).unwrap();
        assert_eq!(em.re, kk.re, "entry ({wi},{bi})");
        assert_eq!(em.im, kk.im, "entry ({wi},{bi})");
    }
}

#[test]
fn quadrature_inverse_matches_solve_sampled() {
    let p = DiamondParams::with_rational_a(4, 2, 1, 2).unwrap();
    let g = build_region(&p).unwrap();
    let kernel = QuadKernel::quadrature(&p, 1e-12).unwrap();
    let solved = inverse_solve(&g).unwrap();
    for (wi, bi) in [(0usize, 5usize), (12, 3), (25, 25), (31, 0)] {
        let w = (g.whites[wi].xi, g.whites[wi].eta);
        let b = (g.blacks[bi].xi, g.blacks[bi].eta);
        let e = kernel.k_inverse_entry(w, b).unwrap();
        let f = Complexd::new(e.re, e.im);
        assert!(
            (f - solved[(wi, bi)]).norm() < 1e-9,
            "entry ({wi},{bi}): {f} vs {}",
            solved[(wi, bi)]
        );
    }
}

#[test]
fn exact_identity_smallest_instance() {
    // n = 2, rho = 2: K_a · C = I holds exactly in Q(i).
    let p = DiamondParams::with_rational_a(2, 2, 1, 2).unwrap();
    let g = build_region(&p).unwrap();
    let kernel = ExactKernel::exact(&p).unwrap();
    let reports = verify_identity_cases(&g, &kernel, 0.0).unwrap();
    for r in &reports {
        assert_eq!(
            r.max_residual, 0.0,
            "class {:?} has nonzero residual",
            r.class
        );
    }
    let _ = FiniteKernel::exact(&p).unwrap();
}

#[test]
fn identity_cases_all_classes_n4() {
    let p = DiamondParams::with_rational_a(4, 2, 1, 2).unwrap();
    let g = build_region(&p).unwrap();
    let kernel = ExactKernel::exact(&p).unwrap();
    let reports = verify_identity_cases(&g, &kernel, 1e-12).unwrap();
    let mut classes_seen = 0;
    for r in &reports {
        println!(
            "class {:?}: rows {}, max residual {:.3e}",
            r.class, r.rows_checked, r.max_residual
        );
        assert!(r.first_failure.is_none(), "{:?}", r);
        classes_seen += 1;
    }
    assert_eq!(classes_seen, 5);
}
