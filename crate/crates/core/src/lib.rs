//! Dimer model of the double Aztec diamond.
//!
//! Two Aztec diamonds of size `n` with opposite checkerboard orientations
//! overlap in `rho` lines of black squares; vertical dominoes carry weight
//! `a > 0`. The crate implements the model end to end:
//!
//! * [`region`] — geometry, coordinate systems and the bipartite dual graph;
//! * [`tiling`] — tilings as perfect matchings, height functions, particle
//!   extraction and interlacing checks;
//! * [`sampler`] — a seeded 2x2-flip Markov chain targeting `a^{#vertical}`;
//! * [`contour`] — trapezoidal quadrature on circles and truncated vertical
//!   lines, plus an exact-rational residue engine for Laurent integrands;
//! * [`kasteleyn`] — the signed adjacency matrix, partition function, two
//!   independent inverses and edge correlations;
//! * [`kernels`] — the finite-size L/K correlation kernels and the limiting
//!   tacnode GUE-minor kernel;
//! * [`asymptotics`] — the rescaled kernels and the convergence ladder
//!   towards the tacnode GUE-minor kernel;
//! * [`acceptance`] — the machine-checkable identity suite tying all of the
//!   above together.
//!
//! Scalars: quadrature runs on [`Complexd`] (double precision), the residue
//! engine is generic over the coefficient field with [`Rat`] (arbitrary
//! precision rationals) as the exact instantiation and `f64` as a fast
//! approximate one.

pub mod acceptance;
pub mod asymptotics;
pub mod contour;
pub mod error;
pub mod kasteleyn;
pub mod kernels;
pub mod linalg;
pub mod region;
pub mod render;
pub mod sampler;
pub mod scalar;
pub mod tiling;

pub use error::{Error, Result};

/// Double-precision complex scalar used by all quadrature paths.
pub type Complexd = num_complex::Complex<f64>;

/// Exact rational scalar used by the residue oracle and exact linear algebra.
pub type Rat = num_rational::BigRational;

/// Gaussian rational (element of Q(i)); the field the Kasteleyn matrix lives in.
pub type CRat = scalar::Gaussian<Rat>;
