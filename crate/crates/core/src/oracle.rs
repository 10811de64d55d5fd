//! Verification oracle built from simulated Brownian paths on a uniform
//! dyadic grid: the Riemann–Itô prelimit sums, discretized `ζ(i)_j`, and a
//! pathwise Monte Carlo estimate of the mean-square truncation error.
//!
//! Paths are generated coarse-to-fine by Brownian-bridge bisection. Normals
//! are consumed level by level, so the `n`-step path is a prefix of the
//! `2n`-step one: summing adjacent increments of the finer path recovers
//! the coarser path (to rounding).

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::BasisSystem;
use crate::coefficients::{coeff_matrix, CoeffMatrix};
use crate::error::{Error, Result};
use crate::expansion::{bilinear, correction};
use crate::model::{
    kernel_k_unchecked, kernel_kstar_unchecked, Interval, NoisePair, WeightFunction,
};
use crate::remainder::ms_error_bound;
use crate::rng;
use crate::stats::MeanEstimate;

/// Increments of an `m`-dimensional Wiener process on `n` equal steps.
///
/// Row 0 holds the time component, whose increments are all `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    iv: Interval,
    m: usize,
    n: usize,
    seed: u64,
    rows: Vec<Vec<f64>>,
}

impl DiscretePath {
    pub fn interval(&self) -> &Interval {
        &self.iv
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step(&self) -> f64 {
        self.iv.length() / self.n as f64
    }

    /// Grid point `τ_k = t0 + kΔ`.
    pub fn tau(&self, k: usize) -> f64 {
        self.iv.t0() + k as f64 * self.step()
    }

    /// Increments of component `i` (`0` is time).
    pub fn increments(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// The same path on `n / 2` steps.
    pub fn coarsen(&self) -> Result<Self> {
        if self.n < 4 {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen a path of {} steps",
                self.n
            )));
        }
        let n = self.n / 2;
        let mut rows = vec![vec![self.iv.length() / n as f64; n]];
        rows.extend(
            self.rows[1..]
                .iter()
                .map(|r| r.chunks_exact(2).map(|c| c[0] + c[1]).collect()),
        );
        Ok(Self {
            rows,
            n,
            ..self.clone()
        })
    }

    fn check_pair(&self, pair: NoisePair) -> Result<()> {
        if pair.i1() > self.m || pair.i2() > self.m {
            return Err(Error::DimensionMismatch(format!(
                "pair ({}, {}) needs components the {}-dimensional path lacks",
                pair.i1(),
                pair.i2(),
                self.m
            )));
        }
        Ok(())
    }

    /// `ψ(τ_k) Δw(i)_k` for every step.
    fn weighted(&self, psi: &WeightFunction, i: usize) -> Vec<f64> {
        self.rows[i]
            .iter()
            .enumerate()
            .map(|(k, dw)| psi.eval_unchecked(&self.iv, self.tau(k)) * dw)
            .collect()
    }
}

/// Simulates `m` independent components on `n` steps (power of two, ≥ 2).
pub fn sample_path(iv: Interval, m: usize, n: usize, seed: u64) -> Result<DiscretePath> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "path steps must be a power of two >= 2, got {n}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument(
            "path needs at least one noise component".into(),
        ));
    }
    let mut rows = vec![vec![iv.length() / n as f64; n]];
    rows.extend((1..=m).map(|i| bridge_increments(iv.length(), n, seed, i)));
    Ok(DiscretePath {
        iv,
        m,
        n,
        seed,
        rows,
    })
}

/// Bisection: an increment `d` over a span of length `L` splits into
/// `d/2 + (√L / 2) z` and the rest.
fn bridge_increments(len: f64, n: usize, seed: u64, component: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, &[component as u64]);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut cur = vec![len.sqrt() * z()];
    let mut span = len;
    while cur.len() < n {
        let sd = 0.5 * span.sqrt();
        let mut next = Vec::with_capacity(2 * cur.len());
        for &d in &cur {
            let left = 0.5 * d + sd * z();
            next.push(left);
            next.push(d - left);
        }
        cur = next;
        span *= 0.5;
    }
    cur
}

/// `Σ_{k2} Σ_{k1 < k2} a_{k1} b_{k2}` in one pass.
fn strict_lower_sum(a: &[f64], b: &[f64]) -> f64 {
    let mut running = 0.0;
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += y * running;
        running += x;
    }
    total
}

/// Itô prelimit sum
/// `Σ_{k2} Σ_{k1 < k2} ψ1(τ_{k1}) ψ2(τ_{k2}) Δw(i1)_{k1} Δw(i2)_{k2}`.
pub fn prelimit_iterated(
    path: &DiscretePath,
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    pair: NoisePair,
) -> Result<f64> {
    path.check_pair(pair)?;
    Ok(strict_lower_sum(
        &path.weighted(psi1, pair.i1()),
        &path.weighted(psi2, pair.i2()),
    ))
}

/// A bounded function `Φ(t1, t2)` on the square.
pub trait Kernel2D: Sync {
    fn eval(&self, x1: f64, x2: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64 + Sync> Kernel2D for F {
    fn eval(&self, x1: f64, x2: f64) -> f64 {
        self(x1, x2)
    }
}

/// `φ_a(t1) φ_b(t2)`.
pub struct BasisProduct {
    pub basis: BasisSystem,
    pub a: usize,
    pub b: usize,
}

impl Kernel2D for BasisProduct {
    fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.basis.phi_unchecked(self.a, x1) * self.basis.phi_unchecked(self.b, x2)
    }
}

/// `K` (strict) or `K*` (with the half-diagonal) for a pair of weights.
pub struct WeightKernel {
    pub psi1: WeightFunction,
    pub psi2: WeightFunction,
    pub iv: Interval,
    pub with_diagonal: bool,
}

impl Kernel2D for WeightKernel {
    fn eval(&self, x1: f64, x2: f64) -> f64 {
        if self.with_diagonal {
            kernel_kstar_unchecked(&self.psi1, &self.psi2, x1, x2, &self.iv)
        } else {
            kernel_k_unchecked(&self.psi1, &self.psi2, x1, x2, &self.iv)
        }
    }
}

/// Full-square prelimit sum `Σ_{k1, k2} Φ(τ_{k1}, τ_{k2}) Δw(i1)_{k1} Δw(i2)_{k2}`.
pub fn prelimit_multiple<K: Kernel2D + ?Sized>(
    path: &DiscretePath,
    kern: &K,
    pair: NoisePair,
) -> Result<f64> {
    path.check_pair(pair)?;
    let d1 = path.increments(pair.i1());
    let d2 = path.increments(pair.i2());
    let taus: Vec<f64> = (0..path.n()).map(|k| path.tau(k)).collect();
    Ok(taus
        .iter()
        .zip(d1)
        .map(|(&x1, a)| {
            a * taus
                .iter()
                .zip(d2)
                .map(|(&x2, b)| kern.eval(x1, x2) * b)
                .sum::<f64>()
        })
        .sum())
}

/// `Σ_k φ_j(τ_k) Δw(i)_k`, the discretized `ζ(i)_j`.
pub fn zeta_from_path(path: &DiscretePath, b: &BasisSystem, j: usize, i: usize) -> Result<f64> {
    if i > path.m() {
        return Err(Error::DimensionMismatch(format!(
            "component {i} > m = {}",
            path.m()
        )));
    }
    Ok(path
        .increments(i)
        .iter()
        .enumerate()
        .map(|(k, dw)| b.phi_unchecked(j, path.tau(k)) * dw)
        .sum())
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub psi1: WeightFunction,
    pub psi2: WeightFunction,
    pub basis: BasisSystem,
    pub p1: usize,
    pub p2: usize,
    pub pair: NoisePair,
    /// Grid steps per path (power of two).
    pub n: usize,
    pub paths: usize,
    pub seed: u64,
}

/// How the `theory` value of a report relates to the true error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoryKind {
    /// Distinct noise components: exact second moment.
    Exact,
    /// Equal noise components: upper bound.
    Bound,
    /// A time component is involved; the value is indicative only.
    Indicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasCheck {
    pub n_half: usize,
    pub mean_sq_diff_half: f64,
    pub shift: f64,
    pub threshold: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub p1: usize,
    pub p2: usize,
    pub mean_sq_diff: f64,
    pub stderr: f64,
    pub theory: f64,
    pub theory_kind: TheoryKind,
    pub bias_check: BiasCheck,
}

/// Estimates `E[(J* - S_{p1p2})²]` with both terms built from the same
/// simulated paths.
///
/// `J*` is the Itô prelimit sum plus the exact Stratonovich correction;
/// `S_{p1p2}` is the truncated expansion fed with `ζ` computed from the path
/// increments. Each path is re-used on the grid of `n / 2` steps to flag
/// discretization bias.
pub fn coupled_error_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(coupled_error_sweep(cfg, &[(cfg.p1, cfg.p2)])?.remove(0))
}

/// [`coupled_error_experiment`] for several truncations over one set of
/// paths; `cfg.p1`/`cfg.p2` are ignored. Each report equals the single run
/// with the same seed.
pub fn coupled_error_sweep(
    cfg: &ExperimentConfig,
    truncations: &[(usize, usize)],
) -> Result<Vec<ExperimentReport>> {
    if truncations.is_empty() {
        return Err(Error::InvalidArgument("no truncations requested".into()));
    }
    if cfg.paths < 2 {
        return Err(Error::InvalidArgument(
            "need at least two paths for a standard error".into(),
        ));
    }
    if cfg.n < 4 || !cfg.n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid steps must be a power of two >= 4, got {}",
            cfg.n
        )));
    }
    let p1max = truncations.iter().map(|t| t.0).max().unwrap_or(0);
    let p2max = truncations.iter().map(|t| t.1).max().unwrap_or(0);
    let full = coeff_matrix(&cfg.psi1, &cfg.psi2, &cfg.basis, p1max, p2max)?;
    let mats: Vec<CoeffMatrix> = truncations
        .iter()
        .map(|&(p1, p2)| full.truncate(p1, p2))
        .collect::<Result<_>>()?;
    let shift = correction(&full, cfg.pair);
    let iv = *cfg.basis.interval();
    let fine = GridTables::new(cfg, &iv, cfg.n, p1max.max(p2max));
    let coarse = GridTables::new(cfg, &iv, cfg.n / 2, p1max.max(p2max));

    // per path: [fine diff², coarse diff²] for each truncation
    let per_path: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|k| {
            let seed = rng::derive_seed(cfg.seed, &[k as u64]);
            let path = sample_path(iv, cfg.pair.m(), cfg.n, seed).expect("validated grid");
            let half = path.coarsen().expect("n >= 4");
            let a = fine.squared_errors(&path, cfg.pair, &mats, shift);
            let b = coarse.squared_errors(&half, cfg.pair, &mats, shift);
            a.into_iter().zip(b).flat_map(|(x, y)| [x, y]).collect()
        })
        .collect();

    let column = |c: usize| -> Vec<f64> { per_path.iter().map(|r| r[c]).collect() };
    Ok(mats
        .iter()
        .enumerate()
        .map(|(t, mat)| {
            let est = MeanEstimate::from_samples(&column(2 * t));
            let half = MeanEstimate::from_samples(&column(2 * t + 1));
            let err = ms_error_bound(mat, cfg.pair);
            let (theory, theory_kind) = if cfg.pair.i1() == 0 || cfg.pair.i2() == 0 {
                (err.ms_bound_equal, TheoryKind::Indicative)
            } else if cfg.pair.i1() != cfg.pair.i2() {
                (err.ms_exact_offdiag, TheoryKind::Exact)
            } else {
                (err.ms_bound_equal, TheoryKind::Bound)
            };
            let shift = (half.mean - est.mean).abs();
            let threshold = 2.0 * est.stderr;
            if shift > threshold {
                log::warn!(
                    "halving the grid moved the estimate by {shift:e} (> 2 stderr = {threshold:e}) at p1={}, p2={}",
                    mat.p1(),
                    mat.p2()
                );
            }
            ExperimentReport {
                p1: mat.p1(),
                p2: mat.p2(),
                mean_sq_diff: est.mean,
                stderr: est.stderr,
                theory,
                theory_kind,
                bias_check: BiasCheck {
                    n_half: cfg.n / 2,
                    mean_sq_diff_half: half.mean,
                    shift,
                    threshold,
                    warning: shift > threshold,
                },
            }
        })
        .collect())
}

/// Moments of `J*` from paths and of the expansion from fresh Gaussians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentComparison {
    pub oracle_mean: MeanEstimate,
    pub expansion_mean: MeanEstimate,
    pub exact_mean: f64,
}

/// Distributional check: the path oracle and independently sampled
/// expansions (fresh Gaussian `ζ`) should share their mean `E[J*]`.
pub fn compare_means(cfg: &ExperimentConfig) -> Result<MomentComparison> {
    let iv = *cfg.basis.interval();
    let mat = coeff_matrix(&cfg.psi1, &cfg.psi2, &cfg.basis, cfg.p1, cfg.p2)?;
    let shift = correction(&mat, cfg.pair);
    let oracle: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|k| {
            let path = sample_path(
                iv,
                cfg.pair.m(),
                cfg.n,
                rng::derive_seed(cfg.seed, &[k as u64]),
            )?;
            Ok(prelimit_iterated(&path, &cfg.psi1, &cfg.psi2, cfg.pair)? + shift)
        })
        .collect::<Result<_>>()?;
    let fresh: Vec<f64> = crate::expansion::sample_batch(
        &mat,
        cfg.pair,
        cfg.paths,
        rng::derive_seed(cfg.seed, &[u64::MAX]),
    )
    .iter()
    .map(|s| s.stratonovich)
    .collect();
    Ok(MomentComparison {
        oracle_mean: MeanEstimate::from_samples(&oracle),
        expansion_mean: MeanEstimate::from_samples(&fresh),
        exact_mean: if cfg.pair.same_noise() {
            0.5 * mat.weight_product()
        } else {
            crate::expansion::expected_value(&mat, cfg.pair)
        },
    })
}

/// Weights and basis values at the left grid points, shared by all paths.
struct GridTables {
    psi1: Vec<f64>,
    psi2: Vec<f64>,
    /// `phi[j][k] = φ_j(τ_k)`.
    phi: Vec<Vec<f64>>,
}

impl GridTables {
    fn new(cfg: &ExperimentConfig, iv: &Interval, n: usize, jmax: usize) -> Self {
        let d = iv.length() / n as f64;
        let taus: Vec<f64> = (0..n).map(|k| iv.t0() + k as f64 * d).collect();
        let mut phi = vec![vec![0.0; n]; jmax + 1];
        let mut buf = vec![0.0; jmax + 1];
        for (k, &t) in taus.iter().enumerate() {
            cfg.basis.phi_all(t, &mut buf);
            for (j, v) in buf.iter().enumerate() {
                phi[j][k] = *v;
            }
        }
        Self {
            psi1: taus
                .iter()
                .map(|&t| cfg.psi1.eval_unchecked(iv, t))
                .collect(),
            psi2: taus
                .iter()
                .map(|&t| cfg.psi2.eval_unchecked(iv, t))
                .collect(),
            phi,
        }
    }

    fn zetas(&self, dw: &[f64], jmax: usize) -> Vec<f64> {
        self.phi[..=jmax]
            .iter()
            .map(|row| row.iter().zip(dw).map(|(p, d)| p * d).sum())
            .collect()
    }

    fn squared_errors(
        &self,
        path: &DiscretePath,
        pair: NoisePair,
        mats: &[CoeffMatrix],
        shift: f64,
    ) -> Vec<f64> {
        let d1 = path.increments(pair.i1());
        let d2 = path.increments(pair.i2());
        let a: Vec<f64> = self.psi1.iter().zip(d1).map(|(p, d)| p * d).collect();
        let b: Vec<f64> = self.psi2.iter().zip(d2).map(|(p, d)| p * d).collect();
        let jstar = strict_lower_sum(&a, &b) + shift;
        let jmax = self.phi.len() - 1;
        let z1 = self.zetas(d1, jmax);
        let z2 = if pair.i1() == pair.i2() {
            z1.clone()
        } else {
            self.zetas(d2, jmax)
        };
        mats.iter()
            .map(|m| {
                let e = jstar - bilinear(m, &z1, &z2);
                e * e
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> WeightFunction {
        WeightFunction::one()
    }

    #[test]
    fn path_shape_and_validation() {
        let p = sample_path(Interval::unit(), 1, 2, 9).unwrap();
        assert_eq!(p.increments(1).len(), 2);
        assert_eq!(p.increments(0), &[0.5, 0.5]);
        assert!(sample_path(Interval::unit(), 1, 6, 9).is_err());
        assert!(sample_path(Interval::unit(), 1, 1, 9).is_err());
        assert!(sample_path(Interval::unit(), 0, 4, 9).is_err());
    }

    #[test]
    fn refinement_coupling() {
        let iv = Interval::new(0.0, 2.0).unwrap();
        for n in [2, 8, 256] {
            let coarse = sample_path(iv, 2, n, 77).unwrap();
            let fine = sample_path(iv, 2, 2 * n, 77).unwrap();
            // a + (d - a) == d up to one ulp of the bridge halves
            let tol = 8.0 * f64::EPSILON * (iv.length() / n as f64).sqrt();
            for i in 1..=2 {
                let summed: Vec<f64> = fine.increments(i).chunks(2).map(|c| c[0] + c[1]).collect();
                for (a, b) in summed.iter().zip(coarse.increments(i)) {
                    assert!((a - b).abs() <= tol, "n={n}: {a} vs {b}");
                }
            }
            if n >= 4 {
                let half = sample_path(iv, 2, n, 77).unwrap().coarsen().unwrap();
                assert_eq!(half.n(), n / 2);
                assert_eq!(half.increments(0)[0], iv.length() / (n / 2) as f64);
            }
        }
    }

    #[test]
    fn increments_have_step_variance() {
        let iv = Interval::unit();
        let n = 64;
        let mut xs = Vec::new();
        for s in 0..2000 {
            xs.extend_from_slice(sample_path(iv, 1, n, s).unwrap().increments(1));
        }
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let est = MeanEstimate::from_samples(&sq);
        assert!(est.within(1.0 / n as f64, 4.0), "{est:?}");
        assert!(MeanEstimate::from_samples(&xs).within(0.0, 4.0));
    }

    #[test]
    fn iterated_single_term() {
        let mut p = sample_path(Interval::unit(), 1, 2, 0).unwrap();
        p.rows[1] = vec![0.3, -1.1];
        let pair = NoisePair::new(1, 1, 1).unwrap();
        assert_eq!(
            prelimit_iterated(&p, &one(), &one(), pair).unwrap(),
            0.3 * -1.1
        );
    }

    #[test]
    fn time_components_give_riemann_sum() {
        let p = sample_path(Interval::unit(), 1, 4096, 0).unwrap();
        let pair = NoisePair::new(0, 0, 1).unwrap();
        let v = prelimit_iterated(&p, &one(), &one(), pair).unwrap();
        // n(n-1)/2 Δ² = 0.5 (1 - 1/n)
        assert!((v - 0.5 * (1.0 - 1.0 / 4096.0)).abs() < 1e-12);
        let b = BasisSystem::legendre(Interval::unit());
        assert!(zeta_from_path(&p, &b, 1, 0).unwrap().abs() < 1e-3);
    }

    #[test]
    fn multiple_with_zero_and_product_kernels() {
        let b = BasisSystem::legendre(Interval::unit());
        let p = sample_path(Interval::unit(), 2, 64, 5).unwrap();
        let pair = NoisePair::new(1, 2, 2).unwrap();
        assert_eq!(
            prelimit_multiple(&p, &|_: f64, _: f64| 0.0, pair).unwrap(),
            0.0
        );
        let kern = BasisProduct {
            basis: b,
            a: 2,
            b: 3,
        };
        let lhs = prelimit_multiple(&p, &kern, pair).unwrap();
        let rhs = zeta_from_path(&p, &b, 2, 1).unwrap() * zeta_from_path(&p, &b, 3, 2).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn kstar_decomposition_residual() {
        let iv = Interval::unit();
        let pair = NoisePair::new(1, 1, 1).unwrap();
        let w = WeightFunction::Polynomial(vec![1.0, 1.0]);
        let kern = WeightKernel {
            psi1: w.clone(),
            psi2: w.clone(),
            iv,
            with_diagonal: true,
        };
        let p = sample_path(iv, 1, 256, 3).unwrap();
        let full = prelimit_multiple(&p, &kern, pair).unwrap();
        let ito = prelimit_iterated(&p, &w, &w, pair).unwrap();
        let riemann: f64 = (0..256)
            .map(|k| 0.5 * w.eval(&iv, p.tau(k)).unwrap().powi(2) * p.step())
            .sum();
        let direct: f64 = (0..256)
            .map(|k| {
                0.5 * w.eval(&iv, p.tau(k)).unwrap().powi(2)
                    * (p.increments(1)[k].powi(2) - p.step())
            })
            .sum();
        assert!((full - ito - riemann - direct).abs() < 1e-12);
    }

    #[test]
    fn pair_outside_path_is_rejected() {
        let p = sample_path(Interval::unit(), 1, 4, 0).unwrap();
        assert!(prelimit_iterated(&p, &one(), &one(), NoisePair::new(2, 1, 2).unwrap()).is_err());
        assert!(zeta_from_path(&p, &BasisSystem::legendre(Interval::unit()), 0, 2).is_err());
    }

    #[test]
    fn sweep_matches_single_runs() {
        let cfg = ExperimentConfig {
            psi1: one(),
            psi2: one(),
            basis: BasisSystem::legendre(Interval::unit()),
            p1: 2,
            p2: 2,
            pair: NoisePair::new(1, 2, 2).unwrap(),
            n: 64,
            paths: 200,
            seed: 8,
        };
        let sweep = coupled_error_sweep(&cfg, &[(0, 0), (2, 2)]).unwrap();
        let single = coupled_error_experiment(&cfg).unwrap();
        assert_eq!(sweep[1], single);
        assert_eq!(sweep[0].p1, 0);
    }

    #[test]
    fn experiment_validation() {
        let mut cfg = ExperimentConfig {
            psi1: one(),
            psi2: one(),
            basis: BasisSystem::legendre(Interval::unit()),
            p1: 0,
            p2: 0,
            pair: NoisePair::new(1, 2, 2).unwrap(),
            n: 100,
            paths: 10,
            seed: 0,
        };
        assert!(coupled_error_experiment(&cfg).is_err());
        cfg.n = 64;
        cfg.paths = 1;
        assert!(coupled_error_experiment(&cfg).is_err());
    }
}
