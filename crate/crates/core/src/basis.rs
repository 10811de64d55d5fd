//! Complete orthonormal systems on `L2([t0, t1])`: shifted Legendre
//! polynomials and the trigonometric system.
//!
//! Trigonometric ordering: `φ_0` is the constant; `φ_{2r-1}` is the sine and
//! `φ_{2r}` the cosine of frequency `r`, for `r ≥ 1`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::model::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Legendre,
    Trigonometric,
}

impl BasisKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Legendre => "legendre",
            Self::Trigonometric => "trigonometric",
        }
    }

    /// Index convention recorded alongside every coefficient table.
    pub fn convention(&self) -> &'static str {
        match self {
            Self::Legendre => "phi_j = sqrt((2j+1)/(t1-t0)) P_j(2(s-t0)/(t1-t0)-1)",
            Self::Trigonometric => {
                "phi_0 = 1/sqrt(t1-t0); phi_{2r-1} = sqrt(2/(t1-t0)) sin(2 pi r u); \
                 phi_{2r} = sqrt(2/(t1-t0)) cos(2 pi r u); u = (s-t0)/(t1-t0)"
            }
        }
    }
}

impl std::str::FromStr for BasisKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "legendre" => Ok(Self::Legendre),
            "trig" | "trigonometric" => Ok(Self::Trigonometric),
            _ => Err(format!(
                "unknown basis {s:?} (expected legendre or trigonometric)"
            )),
        }
    }
}

/// `P_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `(P_n(x), P_n'(x))`, valid for `|x| < 1`.
pub(crate) fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let p = legendre(n, x);
    let pm1 = legendre(n - 1, x);
    let nf = n as f64;
    (p, nf * (x * p - pm1) / (x * x - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSystem {
    kind: BasisKind,
    iv: Interval,
}

impl BasisSystem {
    pub fn new(kind: BasisKind, iv: Interval) -> Self {
        Self { kind, iv }
    }

    pub fn legendre(iv: Interval) -> Self {
        Self::new(BasisKind::Legendre, iv)
    }

    pub fn trigonometric(iv: Interval) -> Self {
        Self::new(BasisKind::Trigonometric, iv)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn interval(&self) -> &Interval {
        &self.iv
    }

    /// `φ_j(s)`.
    pub fn phi(&self, j: usize, s: f64) -> Result<f64> {
        self.iv.check("s", s)?;
        Ok(self.phi_unchecked(j, s))
    }

    pub(crate) fn phi_unchecked(&self, j: usize, s: f64) -> f64 {
        let h = self.iv.length();
        match self.kind {
            BasisKind::Legendre => {
                let x = 2.0 * (s - self.iv.t0()) / h - 1.0;
                ((2 * j + 1) as f64 / h).sqrt() * legendre(j, x)
            }
            BasisKind::Trigonometric => {
                if j == 0 {
                    return 1.0 / h.sqrt();
                }
                let r = j.div_ceil(2);
                let arg = 2.0 * PI * phase(r, (s - self.iv.t0()) / h);
                let amp = (2.0 / h).sqrt();
                if j % 2 == 1 {
                    amp * arg.sin()
                } else {
                    amp * arg.cos()
                }
            }
        }
    }

    /// Fills `out[j] = φ_j(s)` for `j < out.len()` in one sweep.
    pub fn phi_all(&self, s: f64, out: &mut [f64]) {
        let h = self.iv.length();
        match self.kind {
            BasisKind::Legendre => {
                let x = 2.0 * (s - self.iv.t0()) / h - 1.0;
                let (mut prev, mut cur) = (1.0, x);
                for (j, o) in out.iter_mut().enumerate() {
                    let p = match j {
                        0 => 1.0,
                        1 => x,
                        _ => {
                            let kf = (j - 1) as f64;
                            let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
                            prev = cur;
                            cur = next;
                            next
                        }
                    };
                    *o = ((2 * j + 1) as f64 / h).sqrt() * p;
                }
            }
            BasisKind::Trigonometric => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = self.phi_unchecked(j, s);
                }
            }
        }
    }

    /// `∫_a^c φ_j(s) ds` in closed form.
    pub fn phi_integral(&self, j: usize, a: f64, c: f64) -> Result<f64> {
        self.iv.check("a", a)?;
        self.iv.check("c", c)?;
        if a > c {
            return Err(crate::Error::InvalidArgument(format!(
                "integration bounds out of order: {a} > {c}"
            )));
        }
        Ok(self.antiderivative(j, c) - self.antiderivative(j, a))
    }

    /// An antiderivative of `φ_j` in `s`.
    fn antiderivative(&self, j: usize, s: f64) -> f64 {
        let h = self.iv.length();
        let t0 = self.iv.t0();
        if j == 0 {
            return (s - t0) / h.sqrt();
        }
        match self.kind {
            BasisKind::Legendre => {
                // ∫ P_j dx = (P_{j+1} - P_{j-1}) / (2j+1)
                let x = 2.0 * (s - t0) / h - 1.0;
                let jf = (2 * j + 1) as f64;
                (jf / h).sqrt() * 0.5 * h * (legendre(j + 1, x) - legendre(j - 1, x)) / jf
            }
            BasisKind::Trigonometric => {
                let r = j.div_ceil(2);
                let arg = 2.0 * PI * phase(r, (s - t0) / h);
                let scale = (2.0 / h).sqrt() * h / (2.0 * PI * r as f64);
                if j % 2 == 1 {
                    -scale * arg.cos()
                } else {
                    scale * arg.sin()
                }
            }
        }
    }
}

/// Fractional part of `r u`, so `2π r u` is reduced before `sin`/`cos`.
fn phase(r: usize, u: f64) -> f64 {
    (r as f64 * u).fract()
}
