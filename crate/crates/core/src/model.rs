//! Problem definition: the interval `[t0, t1]`, the weight functions
//! attached to each integration variable, the pair of noise components and
//! the kernels `K` and `K*` over the square.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Slack allowed when checking that a point lies in an interval.
pub const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    t0: f64,
    t1: f64,
}

impl Interval {
    pub fn new(t0: f64, t1: f64) -> Result<Self> {
        if t0.is_finite() && t1.is_finite() && t0 < t1 {
            Ok(Self { t0, t1 })
        } else {
            Err(Error::InvalidInterval { t0, t1 })
        }
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Self { t0: 0.0, t1: 1.0 }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn length(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.t0 - DOMAIN_TOL && s <= self.t1 + DOMAIN_TOL
    }

    pub(crate) fn check(&self, what: &'static str, s: f64) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: s,
                lo: self.t0,
                hi: self.t1,
            })
        }
    }
}

/// User-supplied weight evaluated on `[t0, t1]`.
///
/// Custom weights are always handled by quadrature; the declared bound on
/// `|ψ'|` is carried for reporting only.
#[derive(Clone)]
pub struct CustomWeight {
    label: String,
    derivative_bound: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomWeight {
    pub fn new(
        label: impl Into<String>,
        derivative_bound: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            derivative_bound,
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }
}

impl fmt::Debug for CustomWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomWeight")
            .field("label", &self.label)
            .field("derivative_bound", &self.derivative_bound)
            .finish_non_exhaustive()
    }
}

/// A continuously differentiable deterministic weight `ψ` on `[t0, t1]`.
///
/// Polynomial coefficients are in powers of `u = s - t0`, lowest first.
#[derive(Debug, Clone)]
pub enum WeightFunction {
    Constant(f64),
    Polynomial(Vec<f64>),
    Custom(CustomWeight),
}

impl PartialEq for WeightFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Constant(a), Self::Constant(b)) => a == b,
            (Self::Polynomial(a), Self::Polynomial(b)) => a == b,
            (Self::Custom(a), Self::Custom(b)) => Arc::ptr_eq(&a.f, &b.f),
            _ => false,
        }
    }
}

impl WeightFunction {
    pub fn one() -> Self {
        Self::Constant(1.0)
    }

    /// `ψ(s) = (s - t0)^q`, the weights arising in stochastic Taylor schemes.
    pub fn power(q: usize) -> Self {
        let mut c = vec![0.0; q + 1];
        c[q] = 1.0;
        Self::Polynomial(c)
    }

    /// Coefficients in powers of `s - t0`, or `None` for custom weights.
    pub fn polynomial_coeffs(&self) -> Option<Vec<f64>> {
        match self {
            Self::Constant(c) => Some(vec![*c]),
            Self::Polynomial(c) if c.is_empty() => Some(vec![0.0]),
            Self::Polynomial(c) => Some(c.clone()),
            Self::Custom(_) => None,
        }
    }

    /// `ψ(s)`, checked against the interval.
    pub fn eval(&self, iv: &Interval, s: f64) -> Result<f64> {
        iv.check("s", s)?;
        Ok(self.eval_unchecked(iv, s))
    }

    pub(crate) fn eval_unchecked(&self, iv: &Interval, s: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Polynomial(c) => {
                let u = s - iv.t0();
                c.iter().rev().fold(0.0, |acc, &ck| acc * u + ck)
            }
            Self::Custom(w) => (w.f)(s),
        }
    }

    /// Canonical textual descriptor, e.g. `const:1` or `poly:0,1`.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "const:{c}"),
            Self::Polynomial(cs) => {
                write!(f, "poly:")?;
                for (k, c) in cs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            Self::Custom(w) => write!(f, "custom:{}", w.label),
        }
    }
}

impl FromStr for WeightFunction {
    type Err = Error;

    /// Parses `const:<c>` or `poly:<c0>,<c1>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidWeight(s.to_string());
        let (kind, body) = s.trim().split_once(':').ok_or_else(bad)?;
        let num = |t: &str| -> Result<f64> {
            let v: f64 = t.trim().parse().map_err(|_| bad())?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match kind.trim() {
            "const" => Ok(Self::Constant(num(body)?)),
            "poly" => {
                let cs = body.split(',').map(num).collect::<Result<Vec<_>>>()?;
                Ok(Self::Polynomial(cs))
            }
            _ => Err(bad()),
        }
    }
}

/// Components `(i1, i2)` of the driving process; component 0 is time itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct NoisePair {
    i1: usize,
    i2: usize,
    m: usize,
}

impl NoisePair {
    pub fn new(i1: usize, i2: usize, m: usize) -> Result<Self> {
        if m >= 1 && i1 <= m && i2 <= m {
            Ok(Self { i1, i2, m })
        } else {
            Err(Error::InvalidPair { i1, i2, m })
        }
    }

    pub fn i1(&self) -> usize {
        self.i1
    }

    pub fn i2(&self) -> usize {
        self.i2
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `1{i1 = i2 ≠ 0}`: whether the Stratonovich and Itô integrals differ.
    pub fn same_noise(&self) -> bool {
        self.i1 == self.i2 && self.i1 != 0
    }
}

/// `K(x1, x2) = ψ1(x1) ψ2(x2) 1{x1 < x2}`.
pub fn kernel_k(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    x1: f64,
    x2: f64,
    iv: &Interval,
) -> Result<f64> {
    iv.check("x1", x1)?;
    iv.check("x2", x2)?;
    Ok(kernel_k_unchecked(psi1, psi2, x1, x2, iv))
}

/// `K*(x1, x2) = K(x1, x2) + ½ ψ1(x1) ψ2(x1) 1{x1 = x2}`.
///
/// The diagonal test is exact floating-point equality.
pub fn kernel_kstar(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    x1: f64,
    x2: f64,
    iv: &Interval,
) -> Result<f64> {
    iv.check("x1", x1)?;
    iv.check("x2", x2)?;
    Ok(kernel_kstar_unchecked(psi1, psi2, x1, x2, iv))
}

pub(crate) fn kernel_k_unchecked(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    x1: f64,
    x2: f64,
    iv: &Interval,
) -> f64 {
    if x1 < x2 {
        psi1.eval_unchecked(iv, x1) * psi2.eval_unchecked(iv, x2)
    } else {
        0.0
    }
}

#[allow(clippy::float_cmp)]
pub(crate) fn kernel_kstar_unchecked(
    psi1: &WeightFunction,
    psi2: &WeightFunction,
    x1: f64,
    x2: f64,
    iv: &Interval,
) -> f64 {
    if x1 == x2 {
        0.5 * psi1.eval_unchecked(iv, x1) * psi2.eval_unchecked(iv, x1)
    } else {
        kernel_k_unchecked(psi1, psi2, x1, x2, iv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    #[test]
    fn weight_evaluation() {
        let iv = unit();
        assert_eq!(WeightFunction::one().eval(&iv, 0.3).unwrap(), 1.0);
        let id = WeightFunction::Polynomial(vec![0.0, 1.0]);
        assert_eq!(id.eval(&iv, 0.25).unwrap(), 0.25);
        // 1 + 2(0.5) + 3(0.25)
        let quad = WeightFunction::Polynomial(vec![1.0, 2.0, 3.0]);
        assert!((quad.eval(&iv, 0.5).unwrap() - 2.75).abs() < 1e-15);
    }

    #[test]
    fn polynomial_is_in_shifted_variable() {
        let iv = Interval::new(2.0, 5.0).unwrap();
        let id = WeightFunction::Polynomial(vec![0.0, 1.0]);
        assert_eq!(id.eval(&iv, 3.5).unwrap(), 1.5);
    }

    #[test]
    fn weight_domain_error() {
        let iv = unit();
        let w = WeightFunction::one();
        assert!(w.eval(&iv, 1.0 + 5e-13).is_ok());
        assert!(matches!(w.eval(&iv, 1.0 + 1e-9), Err(Error::Domain { .. })));
        assert!(w.eval(&iv, -0.1).is_err());
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert_eq!(Interval::new(2.0, 5.0).unwrap().length(), 3.0);
    }

    #[test]
    fn pair_validation() {
        assert!(NoisePair::new(0, 2, 2).is_ok());
        assert!(NoisePair::new(3, 1, 2).is_err());
        assert!(NoisePair::new(0, 0, 0).is_err());
        assert!(NoisePair::new(1, 1, 1).unwrap().same_noise());
        assert!(!NoisePair::new(0, 0, 1).unwrap().same_noise());
        assert!(!NoisePair::new(1, 2, 2).unwrap().same_noise());
    }

    #[test]
    fn kernel_values() {
        let iv = unit();
        let one = WeightFunction::one();
        let id = WeightFunction::Polynomial(vec![0.0, 1.0]);
        assert_eq!(kernel_k(&one, &one, 0.2, 0.8, &iv).unwrap(), 1.0);
        assert_eq!(kernel_k(&one, &one, 0.8, 0.2, &iv).unwrap(), 0.0);
        assert_eq!(kernel_k(&id, &one, 0.5, 0.9, &iv).unwrap(), 0.5);

        assert_eq!(kernel_kstar(&one, &one, 0.5, 0.5, &iv).unwrap(), 0.5);
        assert_eq!(kernel_kstar(&one, &one, 0.2, 0.8, &iv).unwrap(), 1.0);
        assert!((kernel_kstar(&id, &id, 0.4, 0.4, &iv).unwrap() - 0.08).abs() < 1e-15);
        assert!(kernel_kstar(&one, &one, 0.5, 1.5, &iv).is_err());
    }

    #[test]
    fn custom_weight() {
        let iv = unit();
        let w = WeightFunction::Custom(CustomWeight::new("exp", 3.0, f64::exp));
        assert!((w.eval(&iv, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!(w.polynomial_coeffs().is_none());
        assert_eq!(w.descriptor(), "custom:exp");
    }

    #[test]
    fn descriptor_parsing() {
        assert_eq!(
            "const:1".parse::<WeightFunction>().unwrap(),
            WeightFunction::one()
        );
        assert_eq!(
            " poly: 1, 2.5 ,-3".parse::<WeightFunction>().unwrap(),
            WeightFunction::Polynomial(vec![1.0, 2.5, -3.0])
        );
        assert_eq!(
            "const:1.000"
                .parse::<WeightFunction>()
                .unwrap()
                .descriptor(),
            "const:1"
        );
        for bad in [
            "",
            "const",
            "const:",
            "poly:",
            "poly:1,,2",
            "sin:1",
            "const:nan",
            "const:inf",
        ] {
            assert!(bad.parse::<WeightFunction>().is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn descriptor_round_trip(cs in prop::collection::vec(-1e6f64..1e6, 1..6), c in -1e6f64..1e6) {
            let p = WeightFunction::Polynomial(cs);
            prop_assert_eq!(p.descriptor().parse::<WeightFunction>().unwrap(), p.clone());
            let k = WeightFunction::Constant(c);
            prop_assert_eq!(k.descriptor().parse::<WeightFunction>().unwrap(), k.clone());
        }

        #[test]
        fn kstar_matches_k_off_diagonal(x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, a in -2.0f64..2.0) {
            let iv = unit();
            let w1 = WeightFunction::Polynomial(vec![a, 1.0]);
            let w2 = WeightFunction::Polynomial(vec![1.0, -a]);
            let k = kernel_k(&w1, &w2, x1, x2, &iv).unwrap();
            let ks = kernel_kstar(&w1, &w2, x1, x2, &iv).unwrap();
            if x1 != x2 {
                prop_assert_eq!(k, ks);
            }
            if x1 >= x2 {
                prop_assert_eq!(k, 0.0);
            }
            let d = kernel_kstar(&w1, &w2, x1, x1, &iv).unwrap();
            let expect = 0.5 * w1.eval(&iv, x1).unwrap() * w2.eval(&iv, x1).unwrap();
            prop_assert!((d - expect).abs() <= 1e-15 * expect.abs().max(1.0));
        }
    }
}
