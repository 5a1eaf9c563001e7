//! Truncated Taylor series ("jets") at a point.
//!
//! A jet of length `n + 1` stores `f(x), f'(x), f''(x)/2!, ..., f^{(n)}(x)/n!`.
//! Products and quotients are Cauchy products, so exact derivatives of
//! weights and tabulated integrals can be combined without finite differences.

pub fn constant(c: f64, order: usize) -> Vec<f64> {
    let mut j = vec![0.0; order + 1];
    j[0] = c;
    j
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|m| (0..=m).map(|i| a[i] * b[m - i]).sum())
        .collect()
}

pub fn div(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut q = vec![0.0; n];
    for m in 0..n {
        let s: f64 = (1..=m).map(|i| b[i] * q[m - i]).sum();
        q[m] = (a[m] - s) / b[0];
    }
    q
}

/// Jet of `f'` from a jet of `f`; one order is lost.
pub fn deriv(a: &[f64]) -> Vec<f64> {
    (1..a.len()).map(|m| m as f64 * a[m]).collect()
}

/// Jet of `∫ f` given its value `c0` at the expansion point.
pub fn integrate(a: &[f64], c0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + 1);
    out.push(c0);
    out.extend(a.iter().enumerate().map(|(m, v)| v / (m + 1) as f64));
    out
}

pub fn exp(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut e = vec![0.0; n];
    if n == 0 {
        return e;
    }
    e[0] = a[0].exp();
    // e' = a' e
    for m in 1..n {
        let s: f64 = (1..=m).map(|i| i as f64 * a[i] * e[m - i]).sum();
        e[m] = s / m as f64;
    }
    e
}

/// `D^m f(x)` for every stored order.
pub fn to_derivatives(a: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    a.iter()
        .enumerate()
        .map(|(m, v)| {
            if m > 0 {
                fact *= m as f64;
            }
            v * fact
        })
        .collect()
}

pub fn from_derivatives(d: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    d.iter()
        .enumerate()
        .map(|(m, v)| {
            if m > 0 {
                fact *= m as f64;
            }
            v / fact
        })
        .collect()
}

/// Jet of `f(c - x)` from the jet of `f` at `c - x`.
pub fn reflect(a: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .map(|(m, v)| if m % 2 == 1 { -v } else { *v })
        .collect()
}
