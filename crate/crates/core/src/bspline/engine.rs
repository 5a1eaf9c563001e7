//! Local representations of Chebyshev B-splines of every order.
//!
//! For weights `v_0, ..., v_{K-1}` the splines of order `ℓ` use the last `ℓ`
//! weights, starting at `top = K - ℓ`. On grid interval `m` they are stored
//! in the basis `u_r = v_top ∫ v_{top+1} ... ∫ v_{top+r}`, `r < ℓ`, with all
//! integrals based at the left end `τ_m`. Order one is the normalized
//! indicator `v_{K-1} 1_{[t_j, t_{j+1})} / ∫ v_{K-1}`; order `ℓ` is obtained
//! from order `ℓ - 1` through
//! `(M_j^ℓ / v_top)' = (M_j^{ℓ-1} - M_{j+1}^{ℓ-1}) / h_j^ℓ`,
//! with `h_j^ℓ` fixed by `∫ M_j^ℓ = 1`.

use std::ops::Range;

use crate::ect::chains::{ChainTable, Loc};
use crate::ect::Weight;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::quad::CHEB_NODES as N;

#[derive(Debug, Clone)]
pub struct LocalSpline {
    range: Range<usize>,
    coeffs: Vec<Vec<f64>>,
    h: f64,
}

impl LocalSpline {
    fn degenerate() -> Self {
        Self {
            range: 0..0,
            coeffs: Vec::new(),
            h: f64::INFINITY,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.range.is_empty()
    }

    /// Grid intervals of the support.
    pub fn intervals(&self) -> Range<usize> {
        self.range.clone()
    }

    /// Local coefficients on interval `m`, empty outside the support.
    pub fn on(&self, m: usize) -> &[f64] {
        if self.range.contains(&m) {
            &self.coeffs[m - self.range.start]
        } else {
            &[]
        }
    }

    /// Normalization divisor `h` (infinite for degenerate splines, unused for order one).
    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Sampled top-order local basis on one tabulation panel.
#[derive(Debug, Clone)]
pub struct SubPanel {
    pub lo: f64,
    pub hi: f64,
    /// `u_r` at the Chebyshev nodes.
    pub u: Vec<[f64; N]>,
    /// `∫_{τ_m} u_r` at the Chebyshev nodes.
    pub anti: Vec<[f64; N]>,
}

#[derive(Debug, Clone)]
pub struct SplineSpace {
    weights: Vec<Weight>,
    partition: Partition,
    tables: Vec<ChainTable>,
    levels: Vec<Vec<LocalSpline>>,
    panels: Vec<Vec<SubPanel>>,
}

impl SplineSpace {
    pub fn new(weights: &[Weight], partition: &Partition) -> Result<Self> {
        let kk = partition.order();
        if weights.len() != kk {
            return Err(Error::Config(format!(
                "{} weights for a partition of order {kk}",
                weights.len()
            )));
        }
        let mut tables = Vec::with_capacity(partition.intervals());
        for m in 0..partition.intervals() {
            let (lo, hi) = partition.grid_interval(m);
            tables.push(ChainTable::build(weights, partition.panel_breaks(lo, hi))?);
        }
        let mut space = Self {
            weights: weights.to_vec(),
            partition: partition.clone(),
            tables,
            levels: Vec::with_capacity(kk),
            panels: Vec::new(),
        };
        space.levels.push(space.first_level());
        for l in 2..=kk {
            let next = space.next_level(l)?;
            space.levels.push(next);
        }
        space.panels = (0..partition.intervals())
            .map(|m| space.sample_panels(m))
            .collect();
        Ok(space)
    }

    pub fn order(&self) -> usize {
        self.partition.order()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn table(&self, m: usize) -> &ChainTable {
        &self.tables[m]
    }

    pub fn panels(&self, m: usize) -> &[SubPanel] {
        &self.panels[m]
    }

    /// Number of splines of order `l`.
    pub fn count(&self, l: usize) -> usize {
        self.partition.intervals() + 2 * self.order() - 1 - l
    }

    pub fn spline(&self, l: usize, j: usize) -> &LocalSpline {
        &self.levels[l - 1][j]
    }

    /// Splines of order `l` that can be nonzero on interval `m`.
    pub fn active(&self, l: usize, m: usize) -> Range<usize> {
        let kk = self.order();
        m + kk - l..m + kk
    }

    fn support_range(&self, l: usize, j: usize) -> Range<usize> {
        let kk = self.order() as isize;
        let (j, l) = (j as isize, l as isize);
        let lo = (j + 1 - kk).max(0);
        let hi = (j + l - kk + 1).min(self.partition.intervals() as isize);
        if lo >= hi {
            0..0
        } else {
            lo as usize..hi as usize
        }
    }

    fn first_level(&self) -> Vec<LocalSpline> {
        let kk = self.order();
        (0..self.count(1))
            .map(|j| {
                let range = self.support_range(1, j);
                if range.is_empty() {
                    return LocalSpline::degenerate();
                }
                let m = range.start;
                let mass = self.tables[m].chain_end(kk - 1, kk - 1);
                LocalSpline {
                    range,
                    coeffs: vec![vec![1.0 / mass]],
                    h: f64::NAN,
                }
            })
            .collect()
    }

    fn next_level(&self, l: usize) -> Result<Vec<LocalSpline>> {
        let top = self.order() - l;
        let lower = &self.levels[l - 2];
        let mut out = Vec::with_capacity(self.count(l));
        for j in 0..self.count(l) {
            let range = self.support_range(l, j);
            if range.is_empty() {
                out.push(LocalSpline::degenerate());
                continue;
            }
            let (lj, lj1) = (&lower[j], &lower[j + 1]);
            // Difference of the lower splines, per interval.
            let diffs: Vec<Vec<f64>> = range
                .clone()
                .map(|m| {
                    (0..l - 1)
                        .map(|r| {
                            lj.on(m).get(r).copied().unwrap_or(0.0)
                                - lj1.on(m).get(r).copied().unwrap_or(0.0)
                        })
                        .collect()
                })
                .collect();
            // Increment of G = ∫_{t_j} (M_j - M_{j+1}) over each interval.
            let mut inc = Vec::with_capacity(diffs.len());
            let mut mag = Vec::with_capacity(diffs.len());
            for (c, m) in diffs.iter().zip(range.clone()) {
                let t = &self.tables[m];
                let terms = c
                    .iter()
                    .enumerate()
                    .map(|(r, v)| v * t.chain_end(top + 1, top + 1 + r));
                let (s, a) = terms.fold((0.0, 0.0), |(s, a), v| (s + v, a + v.abs()));
                inc.push(s);
                mag.push(a);
            }
            // The integration constant is -1 when M_j^{ℓ-1} vanishes, which
            // happens at repeated boundary knots; then G - c is 1 at the left end.
            let c_const = if lj.is_degenerate() { -1.0 } else { 0.0 };
            // G - c at the right end, known exactly since each lower spline has unit mass.
            let total = if !lj.is_degenerate() && lj1.is_degenerate() {
                1.0
            } else {
                0.0
            };
            let count = diffs.len();
            let mut d0 = vec![0.0; count];
            let (mut left, mut left_mag) = (-c_const, 0.0);
            let mut right_tail = vec![(0.0, 0.0); count + 1];
            for q in (0..count).rev() {
                right_tail[q] = (right_tail[q + 1].0 + inc[q], right_tail[q + 1].1 + mag[q]);
            }
            for q in 0..count {
                let (rs, rm) = right_tail[q];
                d0[q] = if left_mag <= rm { left } else { total - rs };
                left += inc[q];
                left_mag += mag[q];
            }
            let mut h = 0.0;
            for (q, m) in range.clone().enumerate() {
                let t = &self.tables[m];
                h += d0[q] * t.chain_end(top, top);
                for (r, v) in diffs[q].iter().enumerate() {
                    h += v * t.chain_end(top, top + 1 + r);
                }
            }
            if !(h > 0.0) {
                return Err(Error::Internal(format!(
                    "normalization of spline {j} of order {l} is {h:e}"
                )));
            }
            let coeffs = (0..count)
                .map(|q| {
                    let mut c = Vec::with_capacity(l);
                    c.push(d0[q] / h);
                    c.extend(diffs[q].iter().map(|v| v / h));
                    c
                })
                .collect();
            out.push(LocalSpline { range, coeffs, h });
        }
        Ok(out)
    }

    fn sample_panels(&self, m: usize) -> Vec<SubPanel> {
        let kk = self.order();
        let t = &self.tables[m];
        (0..t.panels())
            .map(|p| {
                let w0 = t.node_weight(0, p);
                let mut u = Vec::with_capacity(kk);
                let mut anti = Vec::with_capacity(kk);
                for r in 0..kk {
                    let mut ur = [0.0; N];
                    let mut ar = [0.0; N];
                    let a = t.node_chain(0, r, p);
                    for i in 0..N {
                        ur[i] = if r == 0 {
                            w0[i]
                        } else {
                            w0[i] * t.node_chain(1, r, p)[i]
                        };
                        ar[i] = a[i];
                    }
                    u.push(ur);
                    anti.push(ar);
                }
                let b = t.breaks();
                SubPanel {
                    lo: b[p],
                    hi: b[p + 1],
                    u,
                    anti,
                }
            })
            .collect()
    }

    /// `u_r` of order `l` on interval `m` for all `r`, at a located point.
    fn local_basis(&self, l: usize, m: usize, loc: &Loc, x: f64) -> Vec<f64> {
        let top = self.order() - l;
        let t = &self.tables[m];
        let w = self.weights[top].value(x);
        (0..l).map(|r| w * t.chain_at(loc, top + 1, top + r)).collect()
    }

    /// Value of spline `j` of order `l`.
    pub fn eval(&self, l: usize, j: usize, x: f64) -> Result<f64> {
        let m = self.partition.locate(x)?;
        let s = self.spline(l, j);
        let c = s.on(m);
        if c.is_empty() {
            return Ok(0.0);
        }
        let loc = self.tables[m].locate(x)?;
        let u = self.local_basis(l, m, &loc, x);
        Ok(c.iter().zip(&u).map(|(a, b)| a * b).sum())
    }

    /// Values of all order-`l` splines that may be nonzero at `x`, on the
    /// interval `m` (to take one-sided limits at breakpoints).
    pub fn eval_active_on(&self, l: usize, m: usize, x: f64) -> Result<(usize, Vec<f64>)> {
        let loc = self.tables[m].locate(x)?;
        let u = self.local_basis(l, m, &loc, x);
        let act = self.active(l, m);
        let vals = act
            .clone()
            .map(|j| {
                let c = self.spline(l, j).on(m);
                c.iter().zip(&u).map(|(a, b)| a * b).sum()
            })
            .collect();
        Ok((act.start, vals))
    }

    pub fn eval_active(&self, l: usize, x: f64) -> Result<(usize, Vec<f64>)> {
        let m = self.partition.locate(x)?;
        self.eval_active_on(l, m, x)
    }

    /// `L_d M_j(x)` for the order-`l` operators `L_d = D_d ... D_1` with
    /// `D_i f = D(f / v_{top + i - 1})`, from the local representation on `m`.
    pub fn operator_on(&self, l: usize, j: usize, d: usize, m: usize, x: f64) -> Result<f64> {
        let c = self.spline(l, j).on(m);
        if c.is_empty() || d >= l {
            let _ = self.tables[m].locate(x)?;
            return Ok(0.0);
        }
        let top = self.order() - l;
        let t = &self.tables[m];
        let loc = t.locate(x)?;
        let w = self.weights[top + d].value(x);
        Ok((d..l)
            .map(|r| c[r] * w * t.chain_at(&loc, top + d + 1, top + r))
            .sum())
    }

    /// `∫ M_j` of order `l`, from the local antiderivatives.
    pub fn integral(&self, l: usize, j: usize) -> f64 {
        let top = self.order() - l;
        let s = self.spline(l, j);
        s.intervals()
            .map(|m| {
                let t = &self.tables[m];
                s.on(m)
                    .iter()
                    .enumerate()
                    .map(|(r, c)| c * t.chain_end(top, top + r))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Coefficients of `D_ℓ ... D_1 M_j` (top order) in the splines of
    /// order `K - ℓ`, starting at index `j`.
    pub fn derivative_coefficients(&self, ell: usize, j: usize) -> Vec<f64> {
        let kk = self.order();
        let mut beta = vec![1.0];
        for s in 1..=ell {
            let lvl = kk - s + 1;
            let inv = |m: usize| {
                let sp = self.spline(lvl, m);
                if sp.is_degenerate() {
                    0.0
                } else {
                    1.0 / sp.h()
                }
            };
            let mut next = vec![0.0; beta.len() + 1];
            for (q, b) in beta.iter().enumerate() {
                let f = b * inv(j + q);
                next[q] += f;
                next[q + 1] -= f;
            }
            beta = next;
        }
        beta
    }
}
