use thiserror::Error;

use crate::Complexd;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not converge after {nodes} nodes (last two iterates {last:?}, {prev:?})")]
    QuadratureNonConvergence {
        nodes: usize,
        prev: Complexd,
        last: Complexd,
    },

    #[error("contours too close: separation {separation:.3e} below margin {margin:.3e}")]
    ContourCollision { separation: f64, margin: f64 },

    #[error("integrand fails the Gaussian decay check on the truncated line (|f| = {magnitude:.3e} at Im = {at:.1})")]
    DecayCheckFailed { at: f64, magnitude: f64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("singular matrix in {context} (condition estimate {cond:.3e})")]
    Singular { context: &'static str, cond: f64 },

    #[error("height function inconsistent at corner ({0}, {1})")]
    HeightInconsistency(i64, i64),

    #[error("particle extraction mismatch at black ({0}, {1}): domino class and height descent disagree")]
    ExtractionMismatch(i64, i64),

    #[error("graph with {whites} white vertices exceeds the exhaustive enumeration cap {cap}")]
    EnumerationCap { whites: usize, cap: usize },

    #[error("no perfect matching found (matched {matched} of {total} black vertices)")]
    NoPerfectMatching { matched: usize, total: usize },

    #[error("exact arithmetic requires a rational vertical-domino weight")]
    WeightNotRational,

    #[error("truncation certificate failed: {0}")]
    TruncationCertificate(String),

    #[error("the two printed forms of {name} disagree: {lhs} vs {rhs}")]
    FormMismatch {
        name: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
