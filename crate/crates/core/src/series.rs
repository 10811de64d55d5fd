//! Polynomials on `[-1, 1]` stored as Legendre series `Σ a_k P_k(x)`.

/// `x · Σ a_k P_k`, using `x P_k = ((k+1) P_{k+1} + k P_{k-1}) / (2k+1)`.
pub(crate) fn mul_x(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + 1];
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        let d = (2 * k + 1) as f64;
        out[k + 1] += ak * (k + 1) as f64 / d;
        if k > 0 {
            out[k - 1] += ak * k as f64 / d;
        }
    }
    out
}

/// `ψ(u) · g` where `ψ` has coefficients `coeffs` in powers of
/// `u = (h/2)(x + 1)`; Horner's scheme in series space.
pub(crate) fn mul_weight(coeffs: &[f64], g: &[f64], h: f64) -> Vec<f64> {
    let half = 0.5 * h;
    let mut acc: Vec<f64> = Vec::new();
    for &c in coeffs.iter().rev() {
        // acc <- acc · u + c · g
        let mut next = mul_x(&acc);
        for (k, &a) in acc.iter().enumerate() {
            next[k] += a;
        }
        next.iter_mut().for_each(|v| *v *= half);
        if next.len() < g.len() {
            next.resize(g.len(), 0.0);
        }
        for (k, &gk) in g.iter().enumerate() {
            next[k] += c * gk;
        }
        acc = next;
    }
    acc
}

/// `∫_{-1}^{x} Σ a_k P_k`, using `∫ P_k = (P_{k+1} - P_{k-1}) / (2k+1)`.
pub(crate) fn antiderivative(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + 1];
    for (k, &ak) in a.iter().enumerate() {
        if k == 0 {
            // x + 1
            out[0] += ak;
            out[1] += ak;
        } else {
            let d = (2 * k + 1) as f64;
            out[k + 1] += ak / d;
            out[k - 1] -= ak / d;
        }
    }
    out
}

/// The unit vector `P_j`.
pub(crate) fn unit(j: usize) -> Vec<f64> {
    let mut e = vec![0.0; j + 1];
    e[j] = 1.0;
    e
}

pub(crate) fn eval(a: &[f64], x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    let mut sum = 0.0;
    for (k, &ak) in a.iter().enumerate() {
        let p = match k {
            0 => 1.0,
            1 => x,
            _ => {
                let kf = (k - 1) as f64;
                let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
                next
            }
        };
        sum += ak * p;
    }
    sum
}
