//! Correlation kernels: finite-size L/K kernels and the limiting
//! tacnode GUE-minor kernel.

pub mod finite;
pub mod limit;
