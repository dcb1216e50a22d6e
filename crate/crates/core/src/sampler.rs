//! Seeded Markov chain over tilings targeting `P(T) ∝ a^{#vertical}`.
//!
//! Moves are 2x2 flips: a block of four squares covered by two parallel
//! dominoes has its pair swapped between the horizontal and the vertical
//! orientation. Proposals are uniform over the fixed set of interior
//! corners (a corner whose block is not currently flippable is a null
//! move), which keeps the proposal symmetric, so plain Metropolis
//! acceptance min(1, a^{±2}) gives detailed balance with respect to the
//! target weight.
//!
//! RNG: ChaCha12, seeded explicitly; independent chains split by stream.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{DualGraph, KasteleynCoord};
use crate::tiling::Tiling;

/// Name of the generator recorded in manifests.
pub const RNG_ALGORITHM: &str = "chacha12";

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    pub burn_in_flips: u64,
    pub thinning_flips: u64,
    pub n_samples: u64,
}

impl ChainConfig {
    /// Defaults: burn-in 10 n^3 proposals, thinning n^3.
    pub fn with_defaults(n: i64, seed: u64, n_samples: u64) -> Self {
        let n3 = (n * n * n) as u64;
        ChainConfig {
            seed,
            burn_in_flips: 10 * n3,
            thinning_flips: n3,
            n_samples,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.thinning_flips == 0 || self.n_samples == 0 {
            return Err(Error::InvalidParams(
                "thinning and sample count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Any valid perfect matching, by greedy + augmenting-path search.
pub fn initial_tiling(g: &DualGraph) -> Result<Tiling> {
    let nb = g.num_blacks();
    let mut b2w = vec![usize::MAX; nb];
    let mut w2b = vec![usize::MAX; g.num_whites()];
    // Greedy pass.
    for b in 0..nb {
        for &w in &g.adj[b] {
            if w2b[w] == usize::MAX {
                b2w[b] = w;
                w2b[w] = b;
                break;
            }
        }
    }
    // Augment the rest (Kuhn's algorithm).
    fn try_augment(
        g: &DualGraph,
        b: usize,
        seen: &mut [bool],
        b2w: &mut [usize],
        w2b: &mut [usize],
    ) -> bool {
        for &w in &g.adj[b] {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            if w2b[w] == usize::MAX || try_augment(g, w2b[w], seen, b2w, w2b) {
                b2w[b] = w;
                w2b[w] = b;
                return true;
            }
        }
        false
    }
    let mut matched = 0;
    for b in 0..nb {
        if b2w[b] != usize::MAX {
            matched += 1;
            continue;
        }
        let mut seen = vec![false; g.num_whites()];
        if try_augment(g, b, &mut seen, &mut b2w, &mut w2b) {
            matched += 1;
        }
    }
    if matched != nb {
        return Err(Error::NoPerfectMatching { matched, total: nb });
    }
    Tiling::new(g, b2w)
}

/// A flippable 2x2 block, identified by its central corner. The block's
/// squares are the four cells around the corner; it is flippable when its
/// two blacks pair with its two whites inside the block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipBlock {
    pub center: (i64, i64),
}

/// Interior corners whose four surrounding cells are all region squares.
pub fn interior_corners(g: &DualGraph) -> Vec<(i64, i64)> {
    let mut corners = Vec::new();
    for b in &g.blacks {
        // Corner above-right of the black: cells (b), (b+2,eta), white pair.
        for c in [(b.xi + 1, b.eta), (b.xi, b.eta + 1)] {
            let cells = [
                (c.0 + 1, c.1),
                (c.0 - 1, c.1),
                (c.0, c.1 + 1),
                (c.0, c.1 - 1),
            ];
            let all_in = cells.iter().all(|&(x, y)| {
                let k = KasteleynCoord::new(x, y);
                g.black_id(k).is_some() || g.white_id(k).is_some()
            });
            if all_in {
                corners.push(c);
            }
        }
    }
    corners.sort_unstable();
    corners.dedup();
    corners
}

/// The two blacks and two whites around a corner, or None off the region.
fn block_cells(g: &DualGraph, c: (i64, i64)) -> Option<([usize; 2], [usize; 2])> {
    let cells = [
        (c.0 + 1, c.1),
        (c.0 - 1, c.1),
        (c.0, c.1 + 1),
        (c.0, c.1 - 1),
    ];
    let mut blacks = Vec::with_capacity(2);
    let mut whites = Vec::with_capacity(2);
    for (x, y) in cells {
        let k = KasteleynCoord::new(x, y);
        if let Some(b) = g.black_id(k) {
            blacks.push(b);
        } else if let Some(w) = g.white_id(k) {
            whites.push(w);
        } else {
            return None;
        }
    }
    if blacks.len() == 2 && whites.len() == 2 {
        Some(([blacks[0], blacks[1]], [whites[0], whites[1]]))
    } else {
        None
    }
}

/// Is the block at this corner currently covered by two parallel dominoes?
pub fn is_flippable(g: &DualGraph, t: &Tiling, c: (i64, i64)) -> bool {
    match block_cells(g, c) {
        Some(([b0, b1], [w0, w1])) => {
            (t.contains_edge(b0, w0) && t.contains_edge(b1, w1))
                || (t.contains_edge(b0, w1) && t.contains_edge(b1, w0))
        }
        None => false,
    }
}

/// All currently flippable blocks.
pub fn flip_candidates(g: &DualGraph, t: &Tiling) -> Vec<FlipBlock> {
    interior_corners(g)
        .into_iter()
        .filter(|&c| is_flippable(g, t, c))
        .map(|center| FlipBlock { center })
        .collect()
}

/// Swap the two dominoes of a flippable block in place. Returns the change
/// in the number of vertical dominoes (+2 or -2).
pub fn apply_flip(g: &DualGraph, t: &mut Tiling, c: (i64, i64)) -> i64 {
    let ([b0, b1], [w0, w1]) = block_cells(g, c).expect("flip off the region");
    debug_assert!(is_flippable(g, t, c));
    let (w_b0_new, w_b1_new) = if t.contains_edge(b0, w0) {
        (w1, w0)
    } else {
        (w0, w1)
    };
    let before = vertical_in_block(g, t, b0, b1);
    t.white_to_black[t.black_to_white[b0]] = usize::MAX;
    t.white_to_black[t.black_to_white[b1]] = usize::MAX;
    t.black_to_white[b0] = w_b0_new;
    t.black_to_white[b1] = w_b1_new;
    t.white_to_black[w_b0_new] = b0;
    t.white_to_black[w_b1_new] = b1;
    let after = vertical_in_block(g, t, b0, b1);
    after - before
}

fn vertical_in_block(g: &DualGraph, t: &Tiling, b0: usize, b1: usize) -> i64 {
    let mut v = 0;
    for b in [b0, b1] {
        if crate::tiling::domino_type(g, t, b).is_vertical() {
            v += 1;
        }
    }
    v
}

/// Run the chain, streaming thinned samples to the visitor.
pub fn sample<F>(g: &DualGraph, cfg: &ChainConfig, mut visit: F) -> Result<()>
where
    F: FnMut(u64, &Tiling),
{
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut t = initial_tiling(g)?;
    let corners = interior_corners(g);
    let a = g.params.a_value();
    let log_a2 = 2.0 * a.ln();

    let step = |t: &mut Tiling, rng: &mut ChaCha12Rng| {
        let c = corners[rng.gen_range(0..corners.len())];
        if !is_flippable(g, t, c) {
            return;
        }
        // ±2 vertical dominoes; accept with min(1, a^{Δ#vertical}).
        let ([b0, _b1], _) = block_cells(g, c).unwrap();
        let currently_vertical = crate::tiling::domino_type(g, t, b0).is_vertical();
        let delta_log = if currently_vertical { -log_a2 } else { log_a2 };
        if delta_log >= 0.0 || rng.gen::<f64>() < delta_log.exp() {
            apply_flip(g, t, c);
        }
    };

    for _ in 0..cfg.burn_in_flips {
        step(&mut t, &mut rng);
    }
    for i in 0..cfg.n_samples {
        for _ in 0..cfg.thinning_flips {
            step(&mut t, &mut rng);
        }
        visit(i, &t);
    }
    Ok(())
}

/// Fraction of samples containing the edge, with the binomial standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EdgeFrequency {
    pub probability: f64,
    pub std_error: f64,
    pub samples: u64,
}

pub fn empirical_edge_probability(hits: u64, samples: u64) -> EdgeFrequency {
    let p = hits as f64 / samples as f64;
    EdgeFrequency {
        probability: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{build_region, DiamondParams};
    use crate::tiling::{enumerate_tilings, height_function, num_vertical};

    fn graph(n: i64, rho: i64) -> DualGraph {
        let p = DiamondParams::with_rational_a(n, rho, 1, 1).unwrap();
        build_region(&p).unwrap()
    }

    #[test]
    fn initial_tiling_is_valid() {
        for (n, rho) in [(2, 2), (8, 4), (12, 4)] {
            let g = graph(n, rho);
            let t = initial_tiling(&g).unwrap();
            assert_eq!(t.black_to_white.len(), g.num_blacks());
            height_function(&g, &t).unwrap();
        }
    }

    #[test]
    fn flips_are_involutions_and_change_vertical_by_two() {
        let g = graph(4, 2);
        let t0 = initial_tiling(&g).unwrap();
        let mut t = t0.clone();
        let cands = flip_candidates(&g, &t);
        assert!(!cands.is_empty());
        for block in cands {
            let v0 = num_vertical(&g, &t) as i64;
            let delta = apply_flip(&g, &mut t, block.center);
            assert_eq!(delta.abs(), 2);
            assert_eq!(num_vertical(&g, &t) as i64, v0 + delta);
            apply_flip(&g, &mut t, block.center);
            assert_eq!(t, t0);
        }
    }

    #[test]
    fn seed_determinism() {
        let g = graph(4, 2);
        let cfg = ChainConfig {
            seed: 7,
            burn_in_flips: 100,
            thinning_flips: 17,
            n_samples: 5,
        };
        let mut runs = Vec::new();
        for _ in 0..2 {
            let mut stream = Vec::new();
            sample(&g, &cfg, |_, t| stream.push(t.black_to_white.clone())).unwrap();
            runs.push(stream);
        }
        assert_eq!(runs[0], runs[1]);
    }

    #[test]
    fn chain_visits_all_tilings_uniformly_at_a_one() {
        // 4-sigma check of uniformity on the smallest instance.
        let g = graph(2, 2);
        let mut all = Vec::new();
        enumerate_tilings(&g, |t| all.push(t.black_to_white.clone())).unwrap();
        let n_tilings = all.len();
        let samples = 20_000u64;
        let cfg = ChainConfig {
            seed: 42,
            burn_in_flips: 500,
            thinning_flips: 25,
            n_samples: samples,
        };
        let mut counts = std::collections::HashMap::new();
        sample(&g, &cfg, |_, t| {
            *counts.entry(t.black_to_white.clone()).or_insert(0u64) += 1;
        })
        .unwrap();
        assert_eq!(counts.len(), n_tilings);
        let expect = samples as f64 / n_tilings as f64;
        let sigma = (expect * (1.0 - 1.0 / n_tilings as f64)).sqrt();
        for (_, &c) in counts.iter() {
            assert!(
                (c as f64 - expect).abs() < 4.0 * sigma,
                "count {c} vs expected {expect:.1} (sigma {sigma:.1})"
            );
        }
    }

    #[test]
    fn detailed_balance_on_two_state_chain() {
        // A single flippable block is a two-state chain; with weight a the
        // stationary ratio must be a^2 : 1 between vertical and horizontal.
        let p = DiamondParams::with_rational_a(2, 2, 1, 2).unwrap();
        let g = build_region(&p).unwrap();
        // Count states by #vertical over a long run and compare with the
        // exact enumeration weights.
        let mut weights = std::collections::HashMap::new();
        enumerate_tilings(&g, |t| {
            *weights.entry(num_vertical(&g, t)).or_insert(0.0) +=
                0.5f64.powi(num_vertical(&g, t) as i32);
        })
        .unwrap();
        let z: f64 = weights.values().sum();
        let cfg = ChainConfig {
            seed: 3,
            burn_in_flips: 2_000,
            thinning_flips: 13,
            n_samples: 40_000,
        };
        let mut counts = std::collections::HashMap::new();
        sample(&g, &cfg, |_, t| {
            *counts.entry(num_vertical(&g, t)).or_insert(0u64) += 1;
        })
        .unwrap();
        for (k, w) in weights {
            let expect = w / z * cfg.n_samples as f64;
            let got = *counts.get(&k).unwrap_or(&0) as f64;
            let sigma = (expect.max(1.0)).sqrt() * 4.0 + 4.0;
            assert!(
                (got - expect).abs() < 5.0 * sigma,
                "#vertical={k}: got {got}, expected {expect:.1}"
            );
        }
    }
}
