//! Composite Gauss–Legendre quadrature on fixed-order panels.

use std::sync::OnceLock;

use crate::basis::legendre_with_derivative;
use crate::error::{Error, Result};

/// Nodes per panel of the default composite rule.
pub const DEFAULT_ORDER: usize = 20;

/// Most panels any refinement loop is allowed to reach.
pub const MAX_PANELS: usize = 1 << 16;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Nodes are the roots of `P_n`, located by Newton iteration from the
    /// Chebyshev-like initial guesses; weights are `2 / ((1 - x²) P_n'(x)²)`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Same rule applied on `panels` equal sub-intervals of `[a, b]`.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                let hi = if k + 1 == panels { b } else { lo + h };
                self.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}

/// The shared default-order rule.
pub fn default_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(DEFAULT_ORDER))
}

/// Runs `estimate(panels)` with doubling panel counts until two successive
/// estimates agree to `tol` (max-abs over the returned vector).
pub(crate) fn refine<F>(
    context: impl Fn() -> String,
    start: usize,
    tol: f64,
    mut estimate: F,
) -> Result<Vec<f64>>
where
    F: FnMut(usize) -> Vec<f64>,
{
    let mut panels = start.max(1);
    let mut prev = estimate(panels);
    let mut change = f64::INFINITY;
    while panels * 2 <= MAX_PANELS {
        panels *= 2;
        let next = estimate(panels);
        change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureFailure {
        context: context(),
        tol,
        last_change: change,
        panels,
    })
}

/// Scalar adaptive-by-doubling composite integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = default_rule();
    refine(
        || format!("integral over [{a}, {b}]"),
        1,
        tol,
        |n| vec![rule.composite(a, b, n, &f)],
    )
    .map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 20, 64] {
            let r = GaussRule::new(n);
            let s: f64 = r.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        let r = GaussRule::new(6);
        for d in 0..12 {
            let got = r.integrate(-1.0, 1.0, |x| x.powi(d));
            let want = if d % 2 == 1 {
                0.0
            } else {
                2.0 / (d as f64 + 1.0)
            };
            assert!((got - want).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn composite_handles_oscillation() {
        let r = default_rule();
        let got = r.composite(0.0, 1.0, 64, |x| {
            (2.0 * std::f64::consts::PI * 40.0 * x).cos() * x
        });
        assert!(got.abs() < 1e-13);
    }

    #[test]
    fn refinement_failure_is_reported() {
        // |x|^{1/2} has unbounded derivative at 0: doubling converges only slowly.
        let err = integrate(-1.0, 1.0, 1e-30, |x: f64| x.abs().sqrt()).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn scalar_integral() {
        let v = integrate(0.0, 2.0, 1e-14, |x: f64| x.exp()).unwrap();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
    }
}
