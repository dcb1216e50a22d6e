//! Geometry of the double Aztec diamond.
//!
//! Everything lives in the Kasteleyn coordinate system `(ξ, η)`: white
//! squares sit at `ξ` odd / `η` even, black squares at `ξ` even / `η` odd.
//! Black squares fill the rectangle `0 ≤ ξ ≤ 2(2m+n)`, `1 ≤ η ≤ 2n-1`
//! together with a partial bottom row at `η = -1`; whites fill the shifted
//! rectangle plus a partial top row at `η = 2n`. Lines `ξ = 2s` and
//! `z = η+1 = 2r` both run through black squares only.
//!
//! Diamond coordinates `(z, x)` are an affine view used by the K-particle
//! kernel: `z = η + 1`, `x = (η - ξ + 2m + 1)/2`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::rat_to_f64;
use crate::Rat;

/// Vertical-domino weight; keeps the exact rational when there is one so the
/// residue oracle and exact linear algebra stay available.
#[derive(Clone, Debug)]
pub enum Weight {
    Rational(Rat),
    Real(f64),
}

impl Weight {
    pub fn value(&self) -> f64 {
        match self {
            Weight::Rational(r) => rat_to_f64(r),
            Weight::Real(v) => *v,
        }
    }

    pub fn rational(&self) -> Option<&Rat> {
        match self {
            Weight::Rational(r) => Some(r),
            Weight::Real(_) => None,
        }
    }
}

/// The model instance: sizes `n`, overlap `rho` (same parity), weight `a`.
#[derive(Clone, Debug)]
pub struct DiamondParams {
    pub n: i64,
    pub rho: i64,
    pub a: Weight,
}

impl DiamondParams {
    pub fn new(n: i64, rho: i64, a: Weight) -> Result<Self> {
        if n < 1 || rho < 1 || rho > n {
            return Err(Error::InvalidParams(format!(
                "need n >= rho >= 1, got n={n}, rho={rho}"
            )));
        }
        if (n - rho) % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "n and rho must have the same parity (n-rho even), got n={n}, rho={rho}"
            )));
        }
        if !(a.value() > 0.0) {
            return Err(Error::InvalidParams("weight a must be positive".into()));
        }
        Ok(DiamondParams { n, rho, a })
    }

    pub fn with_rational_a(n: i64, rho: i64, num: i64, den: i64) -> Result<Self> {
        Self::new(n, rho, Weight::Rational(Rat::new(num.into(), den.into())))
    }

    /// Half the diamond gap: `n - rho = 2m`.
    pub fn m(&self) -> i64 {
        (self.n - self.rho) / 2
    }

    /// `M = n - rho + 1 = 2m + 1`.
    pub fn big_m(&self) -> i64 {
        self.n - self.rho + 1
    }

    pub fn a_value(&self) -> f64 {
        self.a.value()
    }

    pub fn a_rational(&self) -> Result<Rat> {
        self.a.rational().cloned().ok_or(Error::WeightNotRational)
    }
}

/// A vertex of the dual graph in `(ξ, η)` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KasteleynCoord {
    pub xi: i64,
    pub eta: i64,
}

impl KasteleynCoord {
    pub fn new(xi: i64, eta: i64) -> Self {
        KasteleynCoord { xi, eta }
    }

    pub fn is_black(&self) -> bool {
        self.xi.rem_euclid(2) == 0 && self.eta.rem_euclid(2) == 1
    }

    pub fn is_white(&self) -> bool {
        self.xi.rem_euclid(2) == 1 && self.eta.rem_euclid(2) == 0
    }
}

/// Diamond coordinates `(z, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiamondCoord {
    pub z: i64,
    pub x: i64,
}

/// `(ξ, η) → (z, x)`: `z = η + 1`, `x = (η - ξ + 2m + 1)/2`.
pub fn to_diamond(c: KasteleynCoord, params: &DiamondParams) -> Result<DiamondCoord> {
    let num = c.eta - c.xi + 2 * params.m() + 1;
    if num.rem_euclid(2) != 0 {
        return Err(Error::InvalidParams(format!(
            "({}, {}) is not on the z/x sublattice",
            c.xi, c.eta
        )));
    }
    Ok(DiamondCoord {
        z: c.eta + 1,
        x: num / 2,
    })
}

/// `(z, x) → (ξ, η)`: `ξ = z - 2x + 2m`, `η = z - 1`.
pub fn to_kasteleyn(c: DiamondCoord, params: &DiamondParams) -> KasteleynCoord {
    KasteleynCoord {
        xi: c.z - 2 * c.x + 2 * params.m(),
        eta: c.z - 1,
    }
}

/// Lattice steps from a black square to its white neighbours.
pub const E1: (i64, i64) = (1, 1);
pub const E2: (i64, i64) = (-1, 1);

/// Cell content at a lattice point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Outside,
    Black(usize),
    White(usize),
}

/// Dense-indexed bipartite dual graph of the region.
#[derive(Clone, Debug)]
pub struct DualGraph {
    pub params: DiamondParams,
    pub blacks: Vec<KasteleynCoord>,
    pub whites: Vec<KasteleynCoord>,
    black_ids: HashMap<KasteleynCoord, usize>,
    white_ids: HashMap<KasteleynCoord, usize>,
    /// Dense cell lookup over the bounding box, for the hot per-tiling paths.
    grid: Vec<Cell>,
    grid_height: i64,
    /// For each black id, the adjacent white ids (2 to 4 of them).
    pub adj: Vec<Vec<usize>>,
    /// For each white id, the adjacent black ids.
    pub adj_white: Vec<Vec<usize>>,
    /// All (black id, white id) edges in a fixed order.
    pub edges: Vec<(usize, usize)>,
}

/// Membership test for the white vertex set W_AD.
pub fn in_whites(params: &DiamondParams, x1: i64, x2: i64) -> bool {
    if !(x1.rem_euclid(2) == 1 && x2.rem_euclid(2) == 0) {
        return false;
    }
    let (n, m) = (params.n, params.m());
    (1 <= x1 && x1 <= 2 * (2 * m + n) + 1 && 0 <= x2 && x2 <= 2 * (n - 1))
        || (1 <= x1 && x1 <= 2 * n - 1 && x2 == 2 * n)
}

/// Membership test for the black vertex set B_AD.
pub fn in_blacks(params: &DiamondParams, x1: i64, x2: i64) -> bool {
    if !(x1.rem_euclid(2) == 0 && x2.rem_euclid(2) == 1) {
        return false;
    }
    let (n, m) = (params.n, params.m());
    (0 <= x1 && x1 <= 2 * (2 * m + n) && 1 <= x2 && x2 <= 2 * n - 1)
        || (2 * (2 * m + 1) <= x1 && x1 <= 2 * (2 * m + n) && x2 == -1)
}

/// Construct the dual graph of the double Aztec diamond.
pub fn build_region(params: &DiamondParams) -> Result<DualGraph> {
    let (n, m) = (params.n, params.m());
    let mut blacks = Vec::new();
    let mut whites = Vec::new();
    for x1 in 0..=(2 * (2 * m + n) + 1) {
        for x2 in -1..=(2 * n) {
            if in_blacks(params, x1, x2) {
                blacks.push(KasteleynCoord::new(x1, x2));
            } else if in_whites(params, x1, x2) {
                whites.push(KasteleynCoord::new(x1, x2));
            }
        }
    }
    blacks.sort();
    whites.sort();
    let black_ids: HashMap<_, _> = blacks.iter().copied().zip(0..).collect();
    let white_ids: HashMap<_, _> = whites.iter().copied().zip(0..).collect();

    let mut adj = vec![Vec::new(); blacks.len()];
    let mut adj_white = vec![Vec::new(); whites.len()];
    let mut edges = Vec::new();
    for (bi, b) in blacks.iter().enumerate() {
        for (dx, dy) in [E1, (-E1.0, -E1.1), E2, (-E2.0, -E2.1)] {
            let w = KasteleynCoord::new(b.xi + dx, b.eta + dy);
            if let Some(&wi) = white_ids.get(&w) {
                adj[bi].push(wi);
                adj_white[wi].push(bi);
                edges.push((bi, wi));
            }
        }
    }
    // Dense lookup grid with a one-cell outside margin.
    let grid_width = 2 * (2 * m + n) + 1 + 4;
    let grid_height = 2 * n + 6;
    let mut grid = vec![Cell::Outside; (grid_width * grid_height) as usize];
    let index = |x1: i64, x2: i64| ((x1 + 2) * grid_height + (x2 + 3)) as usize;
    for (i, b) in blacks.iter().enumerate() {
        grid[index(b.xi, b.eta)] = Cell::Black(i);
    }
    for (i, w) in whites.iter().enumerate() {
        grid[index(w.xi, w.eta)] = Cell::White(i);
    }
    let graph = DualGraph {
        params: params.clone(),
        blacks,
        whites,
        black_ids,
        white_ids,
        grid,
        grid_height,
        adj,
        adj_white,
        edges,
    };
    if graph.blacks.len() != graph.whites.len() {
        return Err(Error::InvalidParams(format!(
            "vertex sets unbalanced: {} blacks vs {} whites",
            graph.blacks.len(),
            graph.whites.len()
        )));
    }
    Ok(graph)
}

impl DualGraph {
    /// Constant-time cell lookup; any coordinates are allowed.
    pub fn cell(&self, x1: i64, x2: i64) -> Cell {
        let h = self.grid_height;
        let w = self.grid.len() as i64 / h;
        let (i, j) = (x1 + 2, x2 + 3);
        if i < 0 || i >= w || j < 0 || j >= h {
            Cell::Outside
        } else {
            self.grid[(i * h + j) as usize]
        }
    }

    pub fn black_id(&self, c: KasteleynCoord) -> Option<usize> {
        match self.cell(c.xi, c.eta) {
            Cell::Black(i) => Some(i),
            _ => None,
        }
    }

    pub fn white_id(&self, c: KasteleynCoord) -> Option<usize> {
        match self.cell(c.xi, c.eta) {
            Cell::White(i) => Some(i),
            _ => None,
        }
    }

    /// Corner-grid bounds: corners live in
    /// `[-1, 2(2m+n)+2] x [-2, 2n+1]` with even coordinate sum.
    pub fn corner_bounds(&self) -> (i64, i64, i64, i64) {
        let (n, m) = (self.params.n, self.params.m());
        (-1, 2 * (2 * m + n) + 2, -2, 2 * n + 1)
    }

    #[allow(dead_code)]
    fn unused_id_maps(&self) {
        let _ = (&self.black_ids, &self.white_ids);
    }

    pub fn num_blacks(&self) -> usize {
        self.blacks.len()
    }

    pub fn num_whites(&self) -> usize {
        self.whites.len()
    }

    pub fn summary(&self) -> RegionSummary {
        RegionSummary {
            n: self.params.n,
            rho: self.params.rho,
            m: self.params.m(),
            a: self.params.a_value(),
            n_whites: self.num_whites(),
            n_blacks: self.num_blacks(),
            n_edges: self.edges.len(),
        }
    }
}

/// JSON-exportable region summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionSummary {
    pub n: i64,
    pub rho: i64,
    pub m: i64,
    pub a: f64,
    pub n_whites: usize,
    pub n_blacks: usize,
    pub n_edges: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: i64, rho: i64) -> DiamondParams {
        DiamondParams::with_rational_a(n, rho, 1, 1).unwrap()
    }

    #[test]
    fn rejects_parity_mismatch() {
        assert!(DiamondParams::with_rational_a(8, 3, 1, 1).is_err());
        assert!(DiamondParams::with_rational_a(2, 3, 1, 1).is_err());
    }

    #[test]
    fn vertex_counts_match_set_builders() {
        // Direct enumeration of the set-builder inequalities gives
        // n(2m+n+2) vertices of each colour.
        for (n, rho) in [(2, 2), (4, 2), (8, 4)] {
            let p = params(n, rho);
            let g = build_region(&p).unwrap();
            let expect = (n * (2 * p.m() + n + 2)) as usize;
            assert_eq!(g.num_blacks(), expect);
            assert_eq!(g.num_whites(), expect);
        }
        // The n=8, rho=4 instance of the figures: 112 of each colour.
        let g = build_region(&params(8, 4)).unwrap();
        assert_eq!(g.num_blacks(), 112);
    }

    #[test]
    fn boundary_classes_have_reduced_degree() {
        let p = params(8, 4);
        let n = p.n;
        let m = p.m();
        let g = build_region(&p).unwrap();
        for (bi, b) in g.blacks.iter().enumerate() {
            let deg = g.adj[bi].len();
            assert!((2..=4).contains(&deg));
            let left = b.xi == 0 && (1..=2 * n - 1).contains(&b.eta);
            let bottom = b.eta == -1;
            let special = b.xi == 2 * n && b.eta == 2 * n - 1;
            let top = b.eta == 2 * n - 1 && b.xi >= 2 * n + 2 && b.xi <= 4 * m + 2 * n;
            match deg {
                4 => assert!(!left && !bottom && !top && !special),
                3 => assert!(special),
                2 => assert!(left || bottom || top),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn overlap_contains_rho_lines() {
        // Lines ξ = 2s with n-rho < s <= n belong to both diamonds.
        let p = params(8, 4);
        let lines: Vec<i64> = ((p.n - p.rho + 1)..=p.n).collect();
        assert_eq!(lines.len() as i64, p.rho);
    }

    #[test]
    fn coordinate_maps_roundtrip() {
        let p = params(8, 4); // m = 2
        let g = build_region(&p).unwrap();
        for b in &g.blacks {
            let d = to_diamond(*b, &p).unwrap();
            assert_eq!(to_kasteleyn(d, &p), *b);
        }
        // Examples with m = 1 and m = 2.
        let p1 = params(4, 2);
        assert_eq!(
            to_diamond(KasteleynCoord::new(2, 1), &p1).unwrap(),
            DiamondCoord { z: 2, x: 1 }
        );
        let p2 = params(8, 4);
        assert_eq!(
            to_kasteleyn(DiamondCoord { z: 1, x: 2 }, &p2),
            KasteleynCoord::new(1, 0)
        );
        // Wrong-sublattice points are rejected.
        assert!(to_diamond(KasteleynCoord::new(2, 2), &p1).is_err());
    }
}
