//! Polynomial splines by the Cox–de Boor recursion with a dense projector,
//! an independent path for the `w ≡ 1` cells.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::quad;

#[derive(Debug, Clone)]
pub struct ClassicalSplines {
    knots: Vec<f64>,
    k: usize,
    breaks: Vec<f64>,
    /// Inverse of the Gram matrix of the L¹-normalized B-splines.
    inverse: DMatrix<f64>,
}

impl ClassicalSplines {
    pub fn new(partition: &Partition) -> Result<Self> {
        let k = partition.order();
        let mut s = Self {
            knots: partition.knots().to_vec(),
            k,
            breaks: partition.breakpoints().to_vec(),
            inverse: DMatrix::zeros(0, 0),
        };
        let dim = s.dim();
        let mut gram = DMatrix::<f64>::zeros(dim, dim);
        for w in s.breaks.clone().windows(2) {
            for (x, wt) in quad::mapped_rule(w[0], w[1], k + 1) {
                let v = s.values(x, Some(w[0]));
                for i in 0..dim {
                    if v[i] == 0.0 {
                        continue;
                    }
                    for j in 0..dim {
                        gram[(i, j)] += wt * v[i] * v[j];
                    }
                }
            }
        }
        s.inverse = gram
            .cholesky()
            .ok_or_else(|| Error::Singular("classical Gram matrix".into()))?
            .inverse();
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.knots.len() - self.k
    }

    /// `M_i(x)` for all `i`, using the interval that starts at `left` (or contains `x`).
    pub fn values(&self, x: f64, left: Option<f64>) -> Vec<f64> {
        let (k, t) = (self.k, &self.knots);
        let lo = left.unwrap_or_else(|| {
            let p = self.breaks.partition_point(|&b| b <= x).clamp(1, self.breaks.len() - 1);
            self.breaks[p - 1]
        });
        let mu = t.iter().rposition(|&v| v <= lo).unwrap().min(t.len() - k - 1);
        // Order one: the indicator of [t_mu, t_{mu+1}).
        let mut b = vec![0.0; t.len() - 1];
        b[mu] = 1.0;
        for r in 2..=k {
            let mut next = vec![0.0; t.len() - r];
            for i in mu + 1 - r.min(mu + 1)..=mu.min(t.len() - r - 1) {
                let mut v = 0.0;
                if t[i + r - 1] > t[i] {
                    v += (x - t[i]) / (t[i + r - 1] - t[i]) * b[i];
                }
                if t[i + r] > t[i + 1] {
                    v += (t[i + r] - x) / (t[i + r] - t[i + 1]) * b[i + 1];
                }
                next[i] = v;
            }
            b = next;
        }
        (0..self.dim())
            .map(|i| b[i] * k as f64 / (t[i + k] - t[i]))
            .collect()
    }

    /// Coefficients of `P f`.
    pub fn project(&self, f: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let dim = self.dim();
        let mut mom = nalgebra::DVector::<f64>::zeros(dim);
        for w in self.breaks.windows(2) {
            for (x, wt) in quad::mapped_rule(w[0], w[1], 24) {
                let v = self.values(x, Some(w[0]));
                let fx = f(x);
                for i in 0..dim {
                    mom[i] += wt * fx * v[i];
                }
            }
        }
        (&self.inverse * mom).iter().copied().collect()
    }

    /// `∫ |K(τ, t)| dt`, with `τ` taken on the interval starting at `left`.
    pub fn lebesgue(&self, tau: f64, left: Option<f64>) -> f64 {
        let m = self.values(tau, left);
        let c: Vec<f64> = (0..self.dim())
            .map(|j| (0..self.dim()).map(|i| m[i] * self.inverse[(i, j)]).sum())
            .collect();
        let kern = |x: f64, lo: f64| -> f64 {
            self.values(x, Some(lo)).iter().zip(&c).map(|(a, b)| a * b).sum()
        };
        let mut total = 0.0;
        for w in self.breaks.windows(2) {
            // Split at sign changes found on a fine grid, then integrate each piece.
            let pieces = 32;
            let mut cuts = vec![w[0]];
            let (mut px, mut pv) = (w[0], kern(w[0], w[0]));
            for s in 1..=pieces {
                let x = w[0] + (w[1] - w[0]) * s as f64 / pieces as f64;
                let v = kern(x, w[0]);
                if pv * v < 0.0 {
                    let (mut l, mut r) = (px, x);
                    for _ in 0..60 {
                        let mid = 0.5 * (l + r);
                        if kern(mid, w[0]) * pv > 0.0 {
                            l = mid;
                        } else {
                            r = mid;
                        }
                    }
                    cuts.push(0.5 * (l + r));
                }
                (px, pv) = (x, v);
            }
            cuts.push(w[1]);
            for p in cuts.windows(2) {
                total += quad::integrate(p[0], p[1], self.k + 1, |x| kern(x, w[0])).abs();
            }
        }
        total
    }
}
