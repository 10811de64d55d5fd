//! The remainder kernel
//! `R_{p1p2}(t1, t2) = K*(t1, t2) - Σ Σ C_{j2 j1} φ_{j1}(t1) φ_{j2}(t2)`
//! and the mean-square error functionals of a truncation.

use std::io::{self, Write};

use serde::Serialize;

use crate::coefficients::{fmt_f64, trace_partial_sum, CoeffMatrix};
use crate::error::{Error, Result};
use crate::model::{kernel_kstar_unchecked, NoisePair};

/// Negative projection errors larger than this in magnitude are logged.
pub const CLAMP_WARN: f64 = 1e-10;

/// Mean-square error functionals of one `(p1, p2)` truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub p1: usize,
    pub p2: usize,
    /// `∫∫ R² = ‖K‖² - Σ C²`, clamped at 0.
    pub proj_error_sq: f64,
    /// `∫ R(s, s) ds = ½ ∫ ψ1 ψ2 - Σ_{j ≤ min(p1,p2)} C_{jj}`.
    pub diag_integral: f64,
    /// Second moment of the remainder integral for distinct noise
    /// components, which equals `proj_error_sq` (derived, oracle-validated).
    pub ms_exact_offdiag: f64,
    /// `2 ∫∫ R² + 1{i1 = i2 ≠ 0} (∫ R(s, s) ds)²`.
    pub ms_bound_equal: f64,
}

/// `R_{p1p2}(x1, x2)`.
pub fn remainder_eval(mat: &CoeffMatrix, x1: f64, x2: f64) -> Result<f64> {
    let b = mat.basis();
    let iv = b.interval();
    iv.check("x1", x1)?;
    iv.check("x2", x2)?;
    let mut phi1 = vec![0.0; mat.p1() + 1];
    let mut phi2 = vec![0.0; mat.p2() + 1];
    b.phi_all(x1, &mut phi1);
    b.phi_all(x2, &mut phi2);
    let partial: f64 = phi1
        .iter()
        .enumerate()
        .map(|(j1, f1)| {
            f1 * mat
                .row(j1)
                .iter()
                .zip(&phi2)
                .map(|(c, f2)| c * f2)
                .sum::<f64>()
        })
        .sum();
    Ok(kernel_kstar_unchecked(mat.psi1(), mat.psi2(), x1, x2, iv) - partial)
}

/// `∫ R(s, s) ds` from the closed form; orthonormality collapses the double
/// sum to the trace.
pub fn diag_remainder_integral(mat: &CoeffMatrix) -> f64 {
    let q = mat.p1().min(mat.p2());
    0.5 * mat.weight_product() - trace_partial_sum(mat, q).expect("q is within the matrix")
}

/// `∫∫ R² = ‖K‖² - Σ C²`, clamped at 0.
pub fn ms_projection_error(mat: &CoeffMatrix) -> f64 {
    let raw = mat.k_norm_sq() - mat.sum_sq();
    if raw < -CLAMP_WARN {
        log::warn!(
            "projection error {raw:e} below zero at (p1={}, p2={}); clamping",
            mat.p1(),
            mat.p2()
        );
    }
    raw.max(0.0)
}

pub fn ms_error_bound(mat: &CoeffMatrix, pair: NoisePair) -> ErrorReport {
    let proj = ms_projection_error(mat);
    let diag = diag_remainder_integral(mat);
    let diag_term = if pair.same_noise() { diag * diag } else { 0.0 };
    ErrorReport {
        p1: mat.p1(),
        p2: mat.p2(),
        proj_error_sq: proj,
        diag_integral: diag,
        ms_exact_offdiag: proj,
        ms_bound_equal: 2.0 * proj + diag_term,
    }
}

/// Error reports for every leading block `(p1, p2)` in `truncations`.
pub fn error_curve(
    mat: &CoeffMatrix,
    pair: NoisePair,
    truncations: &[(usize, usize)],
) -> Result<Vec<ErrorReport>> {
    truncations
        .iter()
        .map(|&(p1, p2)| Ok(ms_error_bound(&mat.truncate(p1, p2)?, pair)))
        .collect()
}

/// CSV with header `p1,p2,proj_error_sq,diag_integral,ms_exact_offdiag,ms_bound_equal`.
pub fn write_error_csv<W: Write>(reports: &[ErrorReport], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "p1,p2,proj_error_sq,diag_integral,ms_exact_offdiag,ms_bound_equal"
    )?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.p1,
            r.p2,
            fmt_f64(r.proj_error_sq),
            fmt_f64(r.diag_integral),
            fmt_f64(r.ms_exact_offdiag),
            fmt_f64(r.ms_bound_equal)
        )?;
    }
    Ok(())
}

/// `R` at the cell midpoints of an `n × n` grid over the square. Diagonal
/// cells land exactly on `x1 = x2`.
pub fn remainder_grid(mat: &CoeffMatrix, n: usize) -> Result<Vec<(f64, f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "grid needs at least one cell".into(),
        ));
    }
    let iv = mat.basis().interval();
    let d = iv.length() / n as f64;
    let xs: Vec<f64> = (0..n).map(|k| iv.t0() + (k as f64 + 0.5) * d).collect();
    let mut out = Vec::with_capacity(n * n);
    for &x1 in &xs {
        for &x2 in &xs {
            out.push((x1, x2, remainder_eval(mat, x1, x2)?));
        }
    }
    Ok(out)
}
