//! The L-kernel against exhaustive enumeration: particle correlations, the
//! per-line trace identity, gap probabilities, and the KL relation.

use std::collections::HashMap;

use double_aztec::kernels::finite::ExactKernel;
use double_aztec::region::{build_region, DiamondParams, DualGraph};
use double_aztec::scalar::rat_to_f64;
use double_aztec::tiling::{enumerate_tilings, extract_l_particles, weight_f64};
use double_aztec::Rat;
use num_traits::Zero;

struct Enumerated {
    z: f64,
    /// weight of tilings with an L-particle at each black square
    single: HashMap<(i64, i64), f64>,
    /// particle positions per tiling with weights, for joint queries
    configs: Vec<(Vec<(i64, i64)>, f64)>,
}

fn enumerate(g: &DualGraph) -> Enumerated {
    let mut z = 0.0;
    let mut single = HashMap::new();
    let mut configs = Vec::new();
    enumerate_tilings(g, |t| {
        let w = weight_f64(g, t);
        z += w;
        let pset = extract_l_particles(g, t).unwrap();
        let pts: Vec<(i64, i64)> = pset
            .particles
            .iter()
            .map(|p| (2 * p.line, p.position))
            .collect();
        for &pt in &pts {
            *single.entry(pt).or_insert(0.0) += w;
        }
        configs.push((pts, w));
    })
    .unwrap();
    Enumerated { z, single, configs }
}

fn joint_probability(e: &Enumerated, pts: &[(i64, i64)]) -> f64 {
    let mut total = 0.0;
    for (cfg, w) in &e.configs {
        if pts.iter().all(|p| cfg.contains(p)) {
            total += w;
        }
    }
    total / e.z
}

fn gap_probability_enum(e: &Enumerated, lines: &[(i64, i64, i64)]) -> f64 {
    let mut total = 0.0;
    for (cfg, w) in &e.configs {
        let hit = lines.iter().any(|&(s, k, l)| {
            cfg.iter().any(|&(xi, eta)| xi == 2 * s && eta >= k && eta <= l)
        });
        if !hit {
            total += w;
        }
    }
    total / e.z
}

fn setup(num: i64, den: i64) -> (DualGraph, ExactKernel, Enumerated) {
    let p = DiamondParams::with_rational_a(4, 2, num, den).unwrap();
    let g = build_region(&p).unwrap();
    let k = ExactKernel::exact(&p).unwrap();
    let e = enumerate(&g);
    (g, k, e)
}

#[test]
fn trace_identity_per_line() {
    let (_, k, _) = setup(1, 2);
    // Lemma-level deterministic counts for n=4, rho=2 per line s.
    let expected = [(0i64, 4i64), (1, 3), (2, 2), (3, 2), (4, 2), (5, 3), (6, 4)];
    for (s, count) in expected {
        let tr = rat_to_f64(&k.trace_line(s).unwrap());
        assert!(
            (tr - count as f64).abs() < 1e-8,
            "line {s}: trace {tr} vs count {count}"
        );
    }
}

#[test]
fn one_and_two_point_correlations() {
    let (g, k, e) = setup(1, 2);
    // Every black square's occupation probability.
    let mut max_err: f64 = 0.0;
    for b in &g.blacks {
        let p_enum = e.single.get(&(b.xi, b.eta)).copied().unwrap_or(0.0) / e.z;
        let p_kernel = rat_to_f64(&k.l_kernel((b.xi, b.eta), (b.xi, b.eta)).unwrap());
        max_err = max_err.max((p_enum - p_kernel).abs());
    }
    println!("1-point max error: {max_err:.3e}");
    assert!(max_err < 1e-10);

    // A few 2-point and 3-point determinants.
    let triples = [
        [(2, 1), (2, 3), (4, 5)],
        [(6, 5), (8, 3), (4, 7)],
        [(0, 1), (10, 5), (6, -1)],
    ];
    for pts in triples {
        for take in [2usize, 3] {
            let pts = &pts[..take];
            let p_enum = joint_probability(&e, pts);
            let mut mat = vec![vec![Rat::from_integer(0.into()); take]; take];
            for i in 0..take {
                for j in 0..take {
                    mat[i][j] = k.l_kernel(pts[i], pts[j]).unwrap();
                }
            }
            let det = rat_to_f64(&double_aztec::linalg::determinant(&mat));
            assert!(
                (p_enum - det).abs() < 1e-8,
                "{pts:?}: enum {p_enum} vs det {det}"
            );
        }
    }
}

#[test]
fn gap_probabilities_match_enumeration() {
    let (_, k, e) = setup(1, 2);
    let configs: Vec<Vec<(i64, i64, i64)>> = vec![
        vec![(2, 1, 3)],
        vec![(3, -1, 3)],
        vec![(1, 3, 7)],
        vec![(4, 1, 5)],
        vec![(2, 1, 3), (3, 1, 3)],
        vec![(1, 5, 7), (5, 1, 3)],
    ];
    for lines in &configs {
        let p_enum = gap_probability_enum(&e, lines);
        let p_fred = rat_to_f64(&k.gap_probability(lines).unwrap());
        assert!(
            (p_enum - p_fred).abs() < 1e-8,
            "{lines:?}: enum {p_enum} vs fredholm {p_fred}"
        );
    }
}

#[test]
fn kl_relation_exact() {
    // The KL relation should hold identically in rational arithmetic.
    for (num, den) in [(1i64, 1i64), (1, 2)] {
        let p = DiamondParams::with_rational_a(4, 2, num, den).unwrap();
        let k = ExactKernel::exact(&p).unwrap();
        for (p1, p2) in [
            ((2i64, 1i64), (4i64, 3i64)),
            ((6, 5), (6, 5)),
            ((0, 7), (10, 1)),
            ((8, 3), (2, 5)),
            ((4, 5), (4, 7)),
        ] {
            let r = k.kl_residual(p1, p2).unwrap();
            assert!(
                r.is_zero() || rat_to_f64(&r).abs() < 1e-25,
                "KL residual at {p1:?},{p2:?} (a={num}/{den}): {}",
                rat_to_f64(&r)
            );
        }
    }
}
