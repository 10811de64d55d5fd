use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid interval [{t0}, {t1}]: need finite t0 < t1")]
    InvalidInterval { t0: f64, t1: f64 },

    #[error("invalid weight descriptor {0:?}")]
    InvalidWeight(String),

    #[error("invalid noise pair (i1={i1}, i2={i2}) for m={m}")]
    InvalidPair { i1: usize, i2: usize, m: usize },

    #[error("quadrature did not reach tolerance {tol:e} for {context} (last change {last_change:e} at {panels} panels)")]
    QuadratureFailure {
        context: String,
        tol: f64,
        last_change: f64,
        panels: usize,
    },

    #[error("index {index} exceeds extent {extent} of {what}")]
    Index {
        what: &'static str,
        index: usize,
        extent: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::QuadratureFailure { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
