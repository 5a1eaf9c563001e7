//! Tabulated nested integrals of a weight vector.
//!
//! For weights `v_0, ..., v_{K-1}` and a base point `x0`, the chain
//! `E(p, q)(x) = ∫_{x0}^x v_p(s_p) ∫_{x0}^{s_p} v_{p+1} ... ∫_{x0}^{s_{q-1}} v_q`
//! is stored at Chebyshev–Lobatto nodes on every panel, with `E(p, p - 1) = 1`.
//! Panels may run right to left, which gives integrals from a base point
//! that lies to the right of the evaluation point.

use crate::error::{Error, Result};
use crate::jet;
use crate::quad::{cheb, CHEB_NODES as N};

use super::weights::Weight;

const RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ChainTable {
    weights: Vec<Weight>,
    breaks: Vec<f64>,
    xs: Vec<f64>,
    wvals: Vec<Vec<f64>>,
    chains: Vec<Vec<f64>>,
}

/// Panel index and barycentric coefficients of a point.
#[derive(Debug, Clone)]
pub struct Loc {
    pub panel: usize,
    pub coeffs: [f64; N],
}

impl ChainTable {
    /// Tabulates every chain over `breaks` (monotone, first entry is the base
    /// point) and checks the end values against a table on halved panels.
    pub fn build(weights: &[Weight], breaks: Vec<f64>) -> Result<Self> {
        let table = Self::raw(weights, breaks);
        let mut fine_breaks = Vec::with_capacity(2 * table.breaks.len());
        for w in table.breaks.windows(2) {
            fine_breaks.push(w[0]);
            fine_breaks.push(0.5 * (w[0] + w[1]));
        }
        fine_breaks.push(*table.breaks.last().unwrap());
        let fine = Self::raw(weights, fine_breaks);
        let k = weights.len();
        for q in 0..k {
            for p in 0..=q {
                let c = table.chain_end(p, q);
                let f = fine.chain_end(p, q);
                if !((c - f).abs() <= RELATIVE_TOLERANCE * f.abs()) {
                    return Err(Error::QuadratureNotConverged {
                        detail: format!(
                            "chain ({p},{q}) over [{}, {}]: {c:e} vs {f:e} after halving",
                            table.breaks[0],
                            table.breaks[table.breaks.len() - 1]
                        ),
                    });
                }
            }
        }
        Ok(table)
    }

    /// Uniform panels between `x0` and `x1`.
    pub fn uniform(weights: &[Weight], x0: f64, x1: f64, panels: usize) -> Result<Self> {
        let breaks = (0..=panels)
            .map(|i| {
                if i == panels {
                    x1
                } else {
                    x0 + (x1 - x0) * i as f64 / panels as f64
                }
            })
            .collect();
        Self::build(weights, breaks)
    }

    fn raw(weights: &[Weight], breaks: Vec<f64>) -> Self {
        let cr = cheb();
        let k = weights.len();
        let np = breaks.len() - 1;
        let mut xs = vec![0.0; np * N];
        for p in 0..np {
            let (lo, hi) = (breaks[p], breaks[p + 1]);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for j in 0..N {
                xs[p * N + j] = mid + half * cr.nodes[j];
            }
            xs[p * N] = lo;
            xs[p * N + N - 1] = hi;
        }
        let wvals: Vec<Vec<f64>> = weights
            .iter()
            .map(|w| xs.iter().map(|&x| w.value(x)).collect())
            .collect();
        let mut chains = vec![Vec::new(); k * k];
        for q in 0..k {
            for p in (0..=q).rev() {
                let integrand: Vec<f64> = if p == q {
                    wvals[p].clone()
                } else {
                    wvals[p]
                        .iter()
                        .zip(&chains[(p + 1) * k + q])
                        .map(|(a, b)| a * b)
                        .collect()
                };
                chains[p * k + q] = cumulative(&integrand, &breaks);
            }
        }
        Self {
            weights: weights.to_vec(),
            breaks,
            xs,
            wvals,
            chains,
        }
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn base(&self) -> f64 {
        self.breaks[0]
    }

    pub fn end(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Node abscissae of one panel.
    pub fn nodes(&self, panel: usize) -> &[f64] {
        &self.xs[panel * N..(panel + 1) * N]
    }

    /// Chain values at the nodes of one panel; `p > q` is not stored.
    pub fn node_chain(&self, p: usize, q: usize, panel: usize) -> &[f64] {
        &self.chains[p * self.order() + q][panel * N..(panel + 1) * N]
    }

    pub fn node_weight(&self, p: usize, panel: usize) -> &[f64] {
        &self.wvals[p][panel * N..(panel + 1) * N]
    }

    pub fn locate(&self, x: f64) -> Result<Loc> {
        let n = self.breaks.len();
        let (x0, x1) = (self.breaks[0], self.breaks[n - 1]);
        let asc = x1 > x0;
        let (lo, hi) = if asc { (x0, x1) } else { (x1, x0) };
        let tol = 1e-12 * (hi - lo);
        if !(x >= lo - tol && x <= hi + tol) {
            return Err(Error::OutOfDomain { x, a: lo, b: hi });
        }
        let x = x.clamp(lo, hi);
        let inner = &self.breaks[1..n - 1];
        let panel = if asc {
            inner.partition_point(|&b| b <= x)
        } else {
            inner.partition_point(|&b| b >= x)
        };
        let (b0, b1) = (self.breaks[panel], self.breaks[panel + 1]);
        let s = ((2.0 * x - b0 - b1) / (b1 - b0)).clamp(-1.0, 1.0);
        Ok(Loc {
            panel,
            coeffs: cheb().coeffs(s),
        })
    }

    pub fn chain_at(&self, loc: &Loc, p: usize, q: usize) -> f64 {
        if p > q {
            return 1.0;
        }
        let vals = self.node_chain(p, q, loc.panel);
        loc.coeffs.iter().zip(vals).map(|(a, b)| a * b).sum()
    }

    pub fn chain(&self, p: usize, q: usize, x: f64) -> Result<f64> {
        Ok(self.chain_at(&self.locate(x)?, p, q))
    }

    /// Value at the far end of the table.
    pub fn chain_end(&self, p: usize, q: usize) -> f64 {
        if p > q {
            return 1.0;
        }
        *self.chains[p * self.order() + q].last().unwrap()
    }

    /// Taylor jet of `E(p, q)` at `x`, from `D E(p, q) = v_p E(p + 1, q)`.
    pub fn chain_jet(&self, p: usize, q: usize, x: f64, order: usize) -> Result<Vec<f64>> {
        let loc = self.locate(x)?;
        self.chain_jet_at(&loc, p, q, x, order)
    }

    pub fn chain_jet_at(
        &self,
        loc: &Loc,
        p: usize,
        q: usize,
        x: f64,
        order: usize,
    ) -> Result<Vec<f64>> {
        if p > q {
            return Ok(jet::constant(1.0, order));
        }
        let value = self.chain_at(loc, p, q);
        if order == 0 {
            return Ok(vec![value]);
        }
        let inner = self.chain_jet_at(loc, p + 1, q, x, order - 1)?;
        let w = self.weights[p].jet(x, order - 1)?;
        Ok(jet::integrate(&jet::mul(&w, &inner), value))
    }
}

fn cumulative(f: &[f64], breaks: &[f64]) -> Vec<f64> {
    let cr = cheb();
    let mut out = vec![0.0; f.len()];
    let mut carry = 0.0;
    for p in 0..breaks.len() - 1 {
        let half = 0.5 * (breaks[p + 1] - breaks[p]);
        let seg = &f[p * N..(p + 1) * N];
        for i in 0..N {
            let s: f64 = cr.integ[i].iter().zip(seg).map(|(a, b)| a * b).sum();
            out[p * N + i] = carry + half * s;
        }
        carry = out[p * N + N - 1];
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ect::weights::{Constant, Exponential};

    fn ones(k: usize) -> Vec<Weight> {
        (0..k).map(|_| Arc::new(Constant(1.0)) as Weight).collect()
    }

    #[test]
    fn constant_chains_are_scaled_powers() {
        let t = ChainTable::uniform(&ones(4), 0.3, 1.0, 4).unwrap();
        let x: f64 = 0.77;
        let d = x - 0.3;
        assert!((t.chain(0, 3, x).unwrap() - d.powi(4) / 24.0).abs() < 1e-15);
        assert!((t.chain(1, 2, x).unwrap() - d * d / 2.0).abs() < 1e-15);
        assert_eq!(t.chain(2, 1, x).unwrap(), 1.0);
    }

    #[test]
    fn descending_table_integrates_backwards() {
        let t = ChainTable::uniform(&ones(3), 1.0, 0.0, 3).unwrap();
        let x: f64 = 0.4;
        // ∫_1^x ∫_1^s ds' ds = (x - 1)^2 / 2
        assert!((t.chain(1, 2, x).unwrap() - (x - 1.0).powi(2) / 2.0).abs() < 1e-15);
        assert!((t.chain(2, 2, x).unwrap() - (x - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn exponential_chain_and_jet() {
        let w: Vec<Weight> = vec![
            Arc::new(Exponential {
                scale: 1.0,
                rate: 0.5,
            }),
            Arc::new(Exponential {
                scale: 1.0,
                rate: -1.5,
            }),
        ];
        let t = ChainTable::uniform(&w, 0.0, 1.0, 8).unwrap();
        // ∫_0^x e^{s/2} ∫_0^s e^{-3r/2} dr ds
        let f = |x: f64| (2.0 / 3.0) * (2.0 * ((0.5 * x).exp() - 1.0) + ((-x).exp() - 1.0));
        let x = 0.61;
        assert!((t.chain(0, 1, x).unwrap() - f(x)).abs() < 1e-15);
        let j = jet::to_derivatives(&t.chain_jet(0, 1, x, 2).unwrap());
        let d1 = (2.0 / 3.0) * ((0.5 * x).exp() - (-x).exp());
        let d2 = (2.0 / 3.0) * (0.5 * (0.5 * x).exp() + (-x).exp());
        assert!((j[1] - d1).abs() < 1e-14);
        assert!((j[2] - d2).abs() < 1e-13);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let t = ChainTable::uniform(&ones(2), 0.0, 1.0, 2).unwrap();
        assert!(matches!(t.chain(0, 1, 1.5), Err(Error::OutOfDomain { .. })));
    }
}
