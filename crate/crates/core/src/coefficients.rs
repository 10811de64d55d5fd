//! Fourier coefficients of the kernel `K*` in the tensor basis:
//!
//! ```text
//! C_{j2 j1} = ∫_{t0}^{t1} ψ2(t2) φ_{j2}(t2) ∫_{t0}^{t2} ψ1(t1) φ_{j1}(t1) dt1 dt2
//! ```
//!
//! Two independent routes compute them. Polynomial weights on the Legendre
//! basis go through exact Legendre-series arithmetic; everything else goes
//! through composite Gauss quadrature with the inner integral accumulated
//! along the outer nodes, refined by panel doubling until successive
//! estimates agree to the requested tolerance.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{BasisKind, BasisSystem};
use crate::error::{Error, Result};
use crate::model::{Interval, WeightFunction};
use crate::quadrature::{self, default_rule};
use crate::series;

/// Default absolute tolerance for quadrature-computed coefficients.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffMethod {
    /// Closed-form Legendre-series arithmetic.
    ExactLegendre,
    /// Composite Gauss quadrature.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffOptions {
    pub tol: f64,
    /// Skip the exact fast path even when it applies.
    pub force_quadrature: bool,
}

impl Default for CoeffOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            force_quadrature: false,
        }
    }
}

impl CoeffOptions {
    fn method_for(
        &self,
        psi1: &WeightFunction,
        psi2: &WeightFunction,
        b: &BasisSystem,
    ) -> CoeffMethod {
        let polys = psi1.polynomial_coeffs().is_some() && psi2.polynomial_coeffs().is_some();
        if !self.force_quadrature && polys && b.kind() == BasisKind::Legendre {
            CoeffMethod::ExactLegendre
        } else {
            CoeffMethod::Quadrature
        }
    }
}

/// Provenance attached to every coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffMeta {
    pub t0: f64,
    pub t1: f64,
    pub basis: BasisKind,
    pub basis_convention: String,
    pub psi1: String,
    pub psi2: String,
    pub method: CoeffMethod,
    pub tolerance: f64,
    /// Largest panel count any row needed (0 on the exact path).
    pub panels: usize,
}

/// `C_{j2 j1}` for `j1 ≤ p1`, `j2 ≤ p2`, stored row-major by `j1`.
#[derive(Debug, Clone)]
pub struct CoeffMatrix {
    p1: usize,
    p2: usize,
    values: Vec<f64>,
    meta: CoeffMeta,
    psi1: WeightFunction,
    psi2: WeightFunction,
    basis: BasisSystem,
    weight_product: f64,
    k_norm_sq: f64,
}

/// `Φ_{j1}(x) = ∫_{t0}^{x} ψ1(s) φ_{j1}(s) ds`, so that the inner
/// integral of `C_{j2 j1}` at `t2` is `ψ2(t2) Φ_{j1}(t2)`.
pub fn inner_antiderivative(
    psi1: &WeightFunction,
    b: &BasisSystem,
    j1: usize,
    x: f64,
) -> Result<f64> {
    let iv = b.interval();
    iv.check("x", x)?;
    if let (Some(c1), BasisKind::Legendre) = (psi1.polynomial_coeffs(), b.kind()) {
        let h = iv.length();
        let a = series::antiderivative(&series::mul_weight(&c1, &series::unit(j1), h));
        let xs = 2.0 * (x - iv.t0()) / h - 1.0;
        return Ok(0.5 * h * ((2 * j1 + 1) as f64 / h).sqrt() * series::eval(&a, xs));
    }
    let start = quad_start_panels(b, j1);
    let iv = *iv;
    quadrature::refine(
        || format!("inner antiderivative j1={j1} at x={x}"),
        start,
        DEFAULT_TOL,
        |panels| {
            let rule = default_rule();
            vec![rule.composite(iv.t0(), x, panels, |s| {
                psi1.eval_unchecked(&iv, s) * b.phi_unchecked(j1, s)
            })]
        },
    )
    .map(|v| v[0])
}

/// A single coefficient `C_{j2 j1}` at the default tolerance.
pub fn fourier_coeff(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    b: &BasisSystem,
    j1: usize,
    j2: usize,
) -> Result<f64> {
    let opts = CoeffOptions::default();
    let (row, _) = coeff_row(psi1, psi2, b, j1, j2, &opts, opts.method_for(psi1, psi2, b))?;
    Ok(row[j2])
}

/// The `(p1+1) × (p2+1)` coefficient table at the default tolerance.
pub fn coeff_matrix(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    b: &BasisSystem,
    p1: usize,
    p2: usize,
) -> Result<CoeffMatrix> {
    CoeffMatrix::build(psi1, psi2, b, p1, p2, &CoeffOptions::default())
}

/// `∫_{t0}^{t1} ψ1 ψ2 ds`, the Stratonovich–Itô correction integral.
pub fn weight_product_integral(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    iv: &Interval,
) -> Result<f64> {
    if let (Some(a), Some(b)) = (psi1.polynomial_coeffs(), psi2.polynomial_coeffs()) {
        return Ok(poly_integral(&poly_mul(&a, &b), iv.length()));
    }
    quadrature::integrate(iv.t0(), iv.t1(), 1e-13, |s| {
        psi1.eval_unchecked(iv, s) * psi2.eval_unchecked(iv, s)
    })
}

/// `‖K‖² = ∫_{t0}^{t1} ψ2²(t2) ∫_{t0}^{t2} ψ1²(t1) dt1 dt2`.
pub fn k_norm_sq(psi1: &WeightFunction, psi2: &WeightFunction, iv: &Interval) -> Result<f64> {
    if let (Some(a), Some(b)) = (psi1.polynomial_coeffs(), psi2.polynomial_coeffs()) {
        let inner = poly_antiderivative(&poly_mul(&a, &a));
        return Ok(poly_integral(
            &poly_mul(&poly_mul(&b, &b), &inner),
            iv.length(),
        ));
    }
    let iv = *iv;
    quadrature::refine(
        || "norm of K".to_string(),
        1,
        DEFAULT_TOL,
        |panels| {
            vec![
                cumulative_outer(&iv, panels, |s| psi1.eval_unchecked(&iv, s).powi(2))
                    .into_iter()
                    .map(|(s, w, inner)| w * psi2.eval_unchecked(&iv, s).powi(2) * inner)
                    .sum::<f64>(),
            ]
        },
    )
    .map(|v| v[0])
}

/// `Σ_{j=0}^{p} C_{jj}`.
pub fn trace_partial_sum(mat: &CoeffMatrix, p: usize) -> Result<f64> {
    let extent = mat.p1.min(mat.p2);
    if p > extent {
        return Err(Error::Index {
            what: "coefficient diagonal",
            index: p,
            extent,
        });
    }
    Ok((0..=p).map(|j| mat.get(j, j)).sum())
}

impl CoeffMatrix {
    pub fn build(
        psi1: &WeightFunction,
        psi2: &WeightFunction,
        b: &BasisSystem,
        p1: usize,
        p2: usize,
        opts: &CoeffOptions,
    ) -> Result<Self> {
        let method = opts.method_for(psi1, psi2, b);
        let rows: Vec<(Vec<f64>, usize)> = (0..=p1)
            .into_par_iter()
            .map(|j1| coeff_row(psi1, psi2, b, j1, p2, opts, method))
            .collect::<Result<_>>()?;
        let panels = rows.iter().map(|r| r.1).max().unwrap_or(0);
        let values: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::QuadratureFailure {
                context: format!(
                    "non-finite coefficient at (j1={}, j2={})",
                    k / (p2 + 1),
                    k % (p2 + 1)
                ),
                tol: opts.tol,
                last_change: f64::NAN,
                panels,
            });
        }
        let iv = b.interval();
        let meta = CoeffMeta {
            t0: iv.t0(),
            t1: iv.t1(),
            basis: b.kind(),
            basis_convention: b.kind().convention().to_string(),
            psi1: psi1.descriptor(),
            psi2: psi2.descriptor(),
            method,
            tolerance: opts.tol,
            panels,
        };
        Ok(Self {
            p1,
            p2,
            values,
            meta,
            psi1: psi1.clone(),
            psi2: psi2.clone(),
            basis: *b,
            weight_product: weight_product_integral(psi1, psi2, iv)?,
            k_norm_sq: k_norm_sq(psi1, psi2, iv)?,
        })
    }

    pub fn p1(&self) -> usize {
        self.p1
    }

    pub fn p2(&self) -> usize {
        self.p2
    }

    /// `C_{j2 j1}`.
    pub fn get(&self, j1: usize, j2: usize) -> f64 {
        assert!(
            j1 <= self.p1 && j2 <= self.p2,
            "({j1}, {j2}) outside {}x{}",
            self.p1,
            self.p2
        );
        self.values[j1 * (self.p2 + 1) + j2]
    }

    /// Row `j1`: `C_{j2 j1}` for `j2 = 0..=p2`.
    pub fn row(&self, j1: usize) -> &[f64] {
        let w = self.p2 + 1;
        &self.values[j1 * w..(j1 + 1) * w]
    }

    pub fn meta(&self) -> &CoeffMeta {
        &self.meta
    }

    pub fn psi1(&self) -> &WeightFunction {
        &self.psi1
    }

    pub fn psi2(&self) -> &WeightFunction {
        &self.psi2
    }

    pub fn basis(&self) -> &BasisSystem {
        &self.basis
    }

    /// `∫ ψ1 ψ2`.
    pub fn weight_product(&self) -> f64 {
        self.weight_product
    }

    /// `‖K‖²` over the square.
    pub fn k_norm_sq(&self) -> f64 {
        self.k_norm_sq
    }

    /// `Σ_{j1 ≤ p1, j2 ≤ p2} C²_{j2 j1}`.
    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|c| c * c).sum()
    }

    /// The leading `(p1+1) × (p2+1)` block.
    pub fn truncate(&self, p1: usize, p2: usize) -> Result<Self> {
        if p1 > self.p1 {
            return Err(Error::Index {
                what: "p1",
                index: p1,
                extent: self.p1,
            });
        }
        if p2 > self.p2 {
            return Err(Error::Index {
                what: "p2",
                index: p2,
                extent: self.p2,
            });
        }
        let values = (0..=p1)
            .flat_map(|j1| self.row(j1)[..=p2].iter().copied())
            .collect();
        Ok(Self {
            p1,
            p2,
            values,
            ..self.clone()
        })
    }

    /// CSV with header `j1,j2,c`, one row per entry, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "j1,j2,c")?;
        for j1 in 0..=self.p1 {
            for (j2, c) in self.row(j1).iter().enumerate() {
                writeln!(w, "{j1},{j2},{}", fmt_f64(*c))?;
            }
        }
        Ok(())
    }

    /// Serializable snapshot: the meta block plus the rows.
    pub fn table(&self) -> CoeffTable<'_> {
        CoeffTable {
            meta: &self.meta,
            p1: self.p1,
            p2: self.p2,
            values: (0..=self.p1).map(|j1| self.row(j1)).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CoeffTable<'a> {
    pub meta: &'a CoeffMeta,
    pub p1: usize,
    pub p2: usize,
    /// `values[j1][j2] = C_{j2 j1}`.
    pub values: Vec<&'a [f64]>,
}

/// Full round-trip precision for CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Computes row `j1` for all `j2 ≤ p2`; also returns the panel count used.
fn coeff_row(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    b: &BasisSystem,
    j1: usize,
    p2: usize,
    opts: &CoeffOptions,
    method: CoeffMethod,
) -> Result<(Vec<f64>, usize)> {
    match method {
        CoeffMethod::ExactLegendre => {
            // Callers only pick this method for polynomial weights.
            let c1 = psi1.polynomial_coeffs().expect("polynomial weight");
            let c2 = psi2.polynomial_coeffs().expect("polynomial weight");
            Ok((exact_row(&c1, &c2, b.interval().length(), j1, p2), 0))
        }
        CoeffMethod::Quadrature => {
            let start = quad_start_panels(b, j1.max(p2));
            let mut used = start;
            let row = quadrature::refine(
                || format!("coefficient row j1={j1} (j2 <= {p2})"),
                start,
                opts.tol,
                |panels| {
                    used = panels;
                    quadrature_row(psi1, psi2, b, j1, p2, panels)
                },
            )?;
            Ok((row, used))
        }
    }
}

/// With `A = ∫_{-1}^{x} ψ1 P_{j1}` and `G = ψ2 A` as Legendre series,
/// `C_{j2 j1} = (h/2) √((2j1+1)(2j2+1)) G_{j2} / (2j2+1)`.
fn exact_row(c1: &[f64], c2: &[f64], h: f64, j1: usize, p2: usize) -> Vec<f64> {
    let a = series::antiderivative(&series::mul_weight(c1, &series::unit(j1), h));
    let g = series::mul_weight(c2, &a, h);
    let s1 = (2 * j1 + 1) as f64;
    (0..=p2)
        .map(|j2| {
            let gj = g.get(j2).copied().unwrap_or(0.0);
            let s2 = (2 * j2 + 1) as f64;
            0.5 * h * (s1 * s2).sqrt() * gj / s2
        })
        .collect()
}

fn quadrature_row(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    b: &BasisSystem,
    j1: usize,
    p2: usize,
    panels: usize,
) -> Vec<f64> {
    let iv = *b.interval();
    let mut phis = vec![0.0; p2 + 1];
    let mut row = vec![0.0; p2 + 1];
    for (s, w, inner) in cumulative_outer(&iv, panels, |s| {
        psi1.eval_unchecked(&iv, s) * b.phi_unchecked(j1, s)
    }) {
        b.phi_all(s, &mut phis);
        let f = w * psi2.eval_unchecked(&iv, s) * inner;
        for (r, p) in row.iter_mut().zip(&phis) {
            *r += f * p;
        }
    }
    row
}

/// Outer Gauss nodes `(s, weight, ∫_{t0}^{s} f)` over `panels` panels.
///
/// Each panel carries the integral of all previous panels; inside a panel
/// the partial integral up to each node uses the same rule mapped onto
/// `[panel start, node]`.
fn cumulative_outer<F: Fn(f64) -> f64>(iv: &Interval, panels: usize, f: F) -> Vec<(f64, f64, f64)> {
    let rule = default_rule();
    let h = iv.length() / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    let mut carried = 0.0;
    for k in 0..panels {
        let lo = iv.t0() + h * k as f64;
        let hi = if k + 1 == panels { iv.t1() } else { lo + h };
        for (s, w) in rule.mapped(lo, hi) {
            out.push((s, w, carried + rule.integrate(lo, s, &f)));
        }
        carried += rule.integrate(lo, hi, &f);
    }
    out
}

/// Starting panel count: at least four panels per period of the highest
/// trigonometric frequency involved.
fn quad_start_panels(b: &BasisSystem, jmax: usize) -> usize {
    match b.kind() {
        BasisKind::Legendre => (jmax / 16).max(1),
        BasisKind::Trigonometric => (4 * jmax.div_ceil(2)).max(2),
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_antiderivative(a: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(a.iter().enumerate().map(|(k, c)| c / (k + 1) as f64))
        .collect()
}

/// `∫_0^h Σ a_k u^k du`.
fn poly_integral(a: &[f64], h: f64) -> f64 {
    a.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (k, c)| acc * h + c / (k + 1) as f64)
        * h
}
