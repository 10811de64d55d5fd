//! Fourier expansions of iterated Stratonovich and Itô stochastic integrals
//! of multiplicity 2,
//!
//! ```text
//! J*[ψ] = ∫*_{t0}^{t1} ψ2(t2) ∫*_{t0}^{t2} ψ1(t1) dw(i1)_{t1} dw(i2)_{t2}
//!       = l.i.m. Σ_{j1 ≤ p1} Σ_{j2 ≤ p2} C_{j2 j1} ζ(i1)_{j1} ζ(i2)_{j2},
//! ```
//!
//! with `ζ(i)_j = ∫ φ_j dw(i)` for an orthonormal basis `{φ_j}` (Legendre or
//! trigonometric). The crate computes the coefficients, samples truncated
//! expansions, evaluates the mean-square error of a truncation, and checks
//! everything against Riemann–Itô sums over simulated Brownian paths.

pub mod basis;
pub mod coefficients;
pub mod error;
pub mod expansion;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod remainder;
pub mod rng;
mod series;
pub mod stats;

pub use basis::{BasisKind, BasisSystem};
pub use coefficients::{
    coeff_matrix, fourier_coeff, inner_antiderivative, k_norm_sq, trace_partial_sum,
    weight_product_integral, CoeffMatrix, CoeffMeta, CoeffMethod, CoeffOptions,
};
pub use error::{Error, Result};
pub use expansion::{
    deterministic_zeta0, expected_value, sample_truncated, ExpansionSample, GaussianDraws,
};
pub use model::{kernel_k, kernel_kstar, CustomWeight, Interval, NoisePair, WeightFunction};
pub use oracle::{
    coupled_error_experiment, prelimit_iterated, prelimit_multiple, sample_path, zeta_from_path,
    DiscretePath, ExperimentConfig, ExperimentReport, Kernel2D,
};
pub use remainder::{
    diag_remainder_integral, ms_error_bound, ms_projection_error, remainder_eval, ErrorReport,
};
