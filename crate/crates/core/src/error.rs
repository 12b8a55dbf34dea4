use thiserror::Error;

/// Errors produced by the geometry, special-function and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("Einstein constant {kappa} is not negative; no Ric = -(n-1) normalization exists")]
    NonNegativeRicci { kappa: f64 },

    #[error("model is not Ricci-normalized: kappa = {kappa}, expected {expected}")]
    NotNormalized { kappa: f64, expected: f64 },

    #[error("hypergeometric series did not converge within {terms} terms (w = {w})")]
    NoConvergence { terms: usize, w: f64 },

    #[error("ODE step {h} exceeds the maximum of 1e-2")]
    StepTooLarge { h: f64 },

    #[error("grid has {len} points, at least {min} required")]
    GridTooShort { len: usize, min: usize },

    #[error("grid must be strictly monotone")]
    NonMonotoneGrid,

    #[error("quadrature reached {subdivisions} subdivisions with error estimate {err} > {tol}")]
    MaxSubdivisions {
        subdivisions: usize,
        err: f64,
        tol: f64,
    },

    #[error("(k = {k}, m = {m}) is not admissible: irreducible Clifford module dimension does not divide k")]
    NotAdmissible { k: u64, m: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
