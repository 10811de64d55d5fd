//! Sampling truncated expansions
//! `Σ_{j1 ≤ p1} Σ_{j2 ≤ p2} C_{j2 j1} ζ(i1)_{j1} ζ(i2)_{j2}`
//! and converting between the Stratonovich and Itô values.
//!
//! The time component `i = 0` is folded into row 0 of [`GaussianDraws`] as
//! the deterministic values `ζ(0)_j = ∫ φ_j ds`, so the sum itself is a
//! plain bilinear form for every pair.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::BasisSystem;
use crate::coefficients::{fmt_f64, CoeffMatrix};
use crate::error::{Error, Result};
use crate::model::NoisePair;
use crate::rng;
use crate::stats::CompensatedSum;

/// `[∫_{t0}^{t1} φ_j ds]_{j = 0..=jmax}`.
pub fn deterministic_zeta0(b: &BasisSystem, jmax: usize) -> Vec<f64> {
    let iv = b.interval();
    (0..=jmax)
        .map(|j| {
            b.phi_integral(j, iv.t0(), iv.t1())
                .expect("full interval is in range")
        })
        .collect()
}

/// `ζ(i)_j` for `i = 0..=m`, `j = 0..=jmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDraws {
    rows: Vec<Vec<f64>>,
    jmax: usize,
    seed: Option<u64>,
}

impl GaussianDraws {
    /// Row 0 deterministic; rows `1..=m` i.i.d. standard normal, entry
    /// `(i, j)` drawn from its own stream keyed by `(seed, i, j)`.
    pub fn sample(b: &BasisSystem, m: usize, jmax: usize, seed: u64) -> Self {
        let mut rows = vec![deterministic_zeta0(b, jmax)];
        rows.extend((1..=m).map(|i| {
            (0..=jmax)
                .map(|j| rng::normal_at(seed, &[i as u64, j as u64]))
                .collect()
        }));
        Self {
            rows,
            jmax,
            seed: Some(seed),
        }
    }

    /// Caller-supplied values for components `1..=m`; row 0 is filled in.
    pub fn from_rows(b: &BasisSystem, noise_rows: Vec<Vec<f64>>) -> Result<Self> {
        let jmax = match noise_rows.first() {
            Some(r) if !r.is_empty() => r.len() - 1,
            _ => {
                return Err(Error::DimensionMismatch(
                    "need at least one non-empty noise row".into(),
                ))
            }
        };
        if noise_rows.iter().any(|r| r.len() != jmax + 1) {
            return Err(Error::DimensionMismatch(
                "noise rows differ in length".into(),
            ));
        }
        let mut rows = vec![deterministic_zeta0(b, jmax)];
        rows.extend(noise_rows);
        Ok(Self {
            rows,
            jmax,
            seed: None,
        })
    }

    pub fn m(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `ζ(i)_j` for all `j`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionSample {
    pub stratonovich: f64,
    pub ito: f64,
    pub p1: usize,
    pub p2: usize,
    pub pair: NoisePair,
    pub seed: Option<u64>,
}

/// Evaluates the truncated double sum for one set of draws.
pub fn sample_truncated(
    mat: &CoeffMatrix,
    draws: &GaussianDraws,
    pair: NoisePair,
) -> Result<ExpansionSample> {
    let need = mat.p1().max(mat.p2());
    if draws.jmax() < need {
        return Err(Error::DimensionMismatch(format!(
            "draws cover j <= {} but the matrix needs j <= {need}",
            draws.jmax()
        )));
    }
    if pair.m() != draws.m() {
        return Err(Error::DimensionMismatch(format!(
            "pair has m = {} but draws have m = {}",
            pair.m(),
            draws.m()
        )));
    }
    let stratonovich = bilinear(mat, draws.row(pair.i1()), draws.row(pair.i2()));
    Ok(ExpansionSample {
        stratonovich,
        ito: ito_from_stratonovich(mat, pair, stratonovich),
        p1: mat.p1(),
        p2: mat.p2(),
        pair,
        seed: draws.seed(),
    })
}

/// `J = J* - ½ 1{i1 = i2 ≠ 0} ∫ ψ1 ψ2`.
pub fn ito_from_stratonovich(mat: &CoeffMatrix, pair: NoisePair, stratonovich: f64) -> f64 {
    stratonovich - correction(mat, pair)
}

pub(crate) fn correction(mat: &CoeffMatrix, pair: NoisePair) -> f64 {
    if pair.same_noise() {
        0.5 * mat.weight_product()
    } else {
        0.0
    }
}

/// `Σ_{j1} ζ1_{j1} Σ_{j2} C_{j2 j1} ζ2_{j2}`, j1-major with compensation.
pub(crate) fn bilinear(mat: &CoeffMatrix, z1: &[f64], z2: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for (j1, &a) in z1.iter().enumerate().take(mat.p1() + 1) {
        if a == 0.0 {
            continue;
        }
        for (c, b) in mat.row(j1).iter().zip(z2) {
            acc.add(c * a * b);
        }
    }
    acc.value()
}

/// Mean of the truncated Stratonovich sum.
///
/// Noise components have `E[ζ_j] = 0` and `E[ζ_a ζ_b] = δ_ab`; the time
/// component contributes its deterministic values.
pub fn expected_value(mat: &CoeffMatrix, pair: NoisePair) -> f64 {
    match (pair.i1(), pair.i2()) {
        (0, 0) => {
            let z = deterministic_zeta0(mat.basis(), mat.p1().max(mat.p2()));
            bilinear(mat, &z, &z)
        }
        (0, _) | (_, 0) => 0.0,
        (a, b) if a == b => (0..=mat.p1().min(mat.p2())).map(|j| mat.get(j, j)).sum(),
        _ => 0.0,
    }
}

/// Exact second moment `E[S²]` of the truncated sum for noise components.
///
/// Independent components give `Σ C²`; equal components add the squared
/// trace and the transposed cross term `Σ C_{ab} C_{ba}` (Isserlis).
pub fn second_moment(mat: &CoeffMatrix, pair: NoisePair) -> Result<f64> {
    if pair.i1() == 0 || pair.i2() == 0 {
        return Err(Error::InvalidArgument(
            "second moment is defined here for noise components only".into(),
        ));
    }
    let mut total = mat.sum_sq();
    if pair.i1() == pair.i2() {
        let q = mat.p1().min(mat.p2());
        let trace: f64 = (0..=q).map(|j| mat.get(j, j)).sum();
        let cross: f64 = (0..=q)
            .flat_map(|a| (0..=q).map(move |b| (a, b)))
            .map(|(a, b)| mat.get(a, b) * mat.get(b, a))
            .sum();
        total += trace * trace + cross;
    }
    Ok(total)
}

/// `count` independent samples; sample `k` uses sub-seed `derive(seed, k)`.
pub fn sample_batch(
    mat: &CoeffMatrix,
    pair: NoisePair,
    count: usize,
    seed: u64,
) -> Vec<ExpansionSample> {
    let jmax = mat.p1().max(mat.p2());
    (0..count)
        .into_par_iter()
        .map(|k| {
            let sub = rng::derive_seed(seed, &[k as u64]);
            let draws = GaussianDraws::sample(mat.basis(), pair.m(), jmax, sub);
            sample_truncated(mat, &draws, pair).expect("draws sized from the matrix")
        })
        .collect()
}

/// CSV with header `seed,i1,i2,p1,p2,stratonovich,ito`.
pub fn write_samples_csv<W: Write>(samples: &[ExpansionSample], mut w: W) -> io::Result<()> {
    writeln!(w, "seed,i1,i2,p1,p2,stratonovich,ito")?;
    for s in samples {
        let seed = s.seed.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{seed},{},{},{},{},{},{}",
            s.pair.i1(),
            s.pair.i2(),
            s.p1,
            s.p2,
            fmt_f64(s.stratonovich),
            fmt_f64(s.ito)
        )?;
    }
    Ok(())
}
