//! Reference Chebyshev–Lobatto tabulation and Gauss–Legendre rules on [-1, 1].

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

/// Chebyshev–Lobatto points per tabulation panel.
pub const CHEB_NODES: usize = 24;

/// Minimum Gauss–Legendre order used on any panel.
pub fn gauss_order(k: usize) -> usize {
    (2 * k).max(16)
}

pub struct ChebRef {
    pub nodes: [f64; CHEB_NODES],
    bary: [f64; CHEB_NODES],
    /// `integ[i][j] = ∫_{-1}^{x_i} ℓ_j(s) ds` for the Lagrange basis `ℓ_j`.
    pub integ: Vec<[f64; CHEB_NODES]>,
}

pub fn cheb() -> &'static ChebRef {
    static REF: OnceLock<ChebRef> = OnceLock::new();
    REF.get_or_init(ChebRef::build)
}

impl ChebRef {
    fn build() -> Self {
        let n = CHEB_NODES;
        let last = (n - 1) as f64;
        let mut nodes = [0.0; CHEB_NODES];
        let mut bary = [0.0; CHEB_NODES];
        for j in 0..n {
            nodes[j] = -(std::f64::consts::PI * j as f64 / last).cos();
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            bary[j] = if j == 0 || j == n - 1 { 0.5 * s } else { s };
        }
        nodes[0] = -1.0;
        nodes[n - 1] = 1.0;
        let mut r = ChebRef {
            nodes,
            bary,
            integ: Vec::with_capacity(n),
        };
        let gl = gauss_legendre(n);
        for i in 0..n {
            let hi = r.nodes[i];
            let half = 0.5 * (hi + 1.0);
            let mut row = [0.0; CHEB_NODES];
            if half > 0.0 {
                for &(s, w) in gl {
                    let x = -1.0 + half * (s + 1.0);
                    let c = r.coeffs(x);
                    for j in 0..n {
                        row[j] += w * half * c[j];
                    }
                }
            }
            r.integ.push(row);
        }
        r
    }

    /// Barycentric interpolation coefficients at `x ∈ [-1, 1]`.
    pub fn coeffs(&self, x: f64) -> [f64; CHEB_NODES] {
        let mut c = [0.0; CHEB_NODES];
        let mut total = 0.0;
        for j in 0..CHEB_NODES {
            let d = x - self.nodes[j];
            if d == 0.0 {
                let mut e = [0.0; CHEB_NODES];
                e[j] = 1.0;
                return e;
            }
            c[j] = self.bary[j] / d;
            total += c[j];
        }
        for v in c.iter_mut() {
            *v /= total;
        }
        c
    }

    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..CHEB_NODES {
            let d = x - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let c = self.bary[j] / d;
            num += c * values[j];
            den += c;
        }
        num / den
    }
}

type Rule = &'static [(f64, f64)];

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    if let Some(r) = guard.get(&n) {
        return r;
    }
    let deg = NonZeroUsize::new(n.max(2)).expect("nonzero");
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(deg).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let leaked: Rule = Box::leak(pairs.into_boxed_slice());
    guard.insert(n, leaked);
    leaked
}

/// Interpolation matrix from the Chebyshev nodes to the `n`-point Gauss rule.
pub fn cheb_to_gauss(n: usize) -> &'static [[f64; CHEB_NODES]] {
    type Table = &'static [[f64; CHEB_NODES]];
    static CACHE: OnceLock<Mutex<HashMap<usize, Table>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("interpolation cache poisoned");
    if let Some(r) = guard.get(&n) {
        return r;
    }
    let c = cheb();
    let rows: Vec<[f64; CHEB_NODES]> = gauss_legendre(n).iter().map(|&(s, _)| c.coeffs(s)).collect();
    let leaked: Table = Box::leak(rows.into_boxed_slice());
    guard.insert(n, leaked);
    leaked
}

/// `∫_lo^hi f` with an `n`-point Gauss rule.
pub fn integrate<F: FnMut(f64) -> f64>(lo: f64, hi: f64, n: usize, mut f: F) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    gauss_legendre(n)
        .iter()
        .map(|&(s, w)| w * f(mid + half * s))
        .sum::<f64>()
        * half
}

/// `∫_lo^hi f` with an `n`-point Gauss rule on each of `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(lo: f64, hi: f64, panels: usize, n: usize, mut f: F) -> f64 {
    let w = (hi - lo) / panels as f64;
    (0..panels)
        .map(|p| integrate(lo + p as f64 * w, lo + (p + 1) as f64 * w, n, &mut f))
        .sum()
}

/// Gauss nodes mapped to `[lo, hi]` with their scaled weights.
pub fn mapped_rule(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    gauss_legendre(n).iter().map(move |&(s, w)| (mid + half * s, w * half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let v = integrate(0.0, 2.0, 8, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn cheb_integration_matrix() {
        let c = cheb();
        let vals: Vec<f64> = c.nodes.iter().map(|x| x.exp()).collect();
        for i in 0..CHEB_NODES {
            let got: f64 = c.integ[i].iter().zip(&vals).map(|(a, b)| a * b).sum();
            let want = c.nodes[i].exp() - (-1f64).exp();
            assert!((got - want).abs() < 1e-14, "{i}: {got} vs {want}");
        }
    }

    #[test]
    fn barycentric_reproduces_smooth_function() {
        let c = cheb();
        let vals: Vec<f64> = c.nodes.iter().map(|x| (3.0 * x).sin()).collect();
        for &x in &[-0.99, -0.3, 0.0, 0.123, 0.77] {
            assert!((c.interpolate(&vals, x) - (3.0 * x).sin()).abs() < 1e-13);
        }
    }
}
