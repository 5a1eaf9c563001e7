//! Gram matrices, the L² orthogonal projector onto the spline space and its
//! Lebesgue function.

use rayon::prelude::*;
use serde::Serialize;

use crate::banded::{Ldlt, SymBand};
use crate::bspline::BSplineBasis;
use crate::error::{Error, Result};
use crate::quad::{self, cheb, CHEB_NODES as N};

/// Relative threshold below which inverse entries count as zero.
pub const NOISE_FLOOR: f64 = 1e-11;
/// Threshold for the checkerboard sign test, relative to the largest entry.
pub const SIGN_FLOOR: f64 = 1e-12;

/// `(⟨M_i, M_j⟩)` or, after [`GramMatrix::renormalized`], `(⟨N_i, N_j⟩)`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    band: SymBand,
    factor: Ldlt,
}

impl GramMatrix {
    pub fn from_band(band: SymBand) -> Result<Self> {
        let factor = band.ldlt()?;
        Ok(Self { band, factor })
    }

    pub fn band(&self) -> &SymBand {
        &self.band
    }

    pub fn size(&self) -> usize {
        self.band.size()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.band.get(i, j)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }

    /// `(s_i s_j G_ij)`.
    pub fn renormalized(&self, scale: &[f64]) -> Result<Self> {
        let n = self.size();
        let bw = self.band.bandwidth();
        let mut b = SymBand::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                b.set(i, j, scale[i] * scale[j] * self.band.get(i, j));
            }
        }
        Self::from_band(b)
    }

    /// Full inverse by one banded solve per unit vector.
    pub fn inverse(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.solve(&e)
            })
            .collect()
    }
}

/// Gram matrix of the B-splines by Gauss quadrature on every tabulation panel.
pub fn assemble_gram(basis: &BSplineBasis) -> Result<GramMatrix> {
    let k = basis.order();
    let sp = basis.space();
    let n = basis.dim();
    let g = quad::gauss_order(k);
    let interp = quad::cheb_to_gauss(g);
    let rule = quad::gauss_legendre(g);
    let mut band = SymBand::zeros(n, k - 1);
    for m in 0..basis.partition().intervals() {
        let act = sp.active(k, m);
        let coeffs: Vec<&[f64]> = act.clone().map(|j| sp.spline(k, j).on(m)).collect();
        for panel in sp.panels(m) {
            let half = 0.5 * (panel.hi - panel.lo);
            let ug: Vec<Vec<f64>> = panel
                .u
                .iter()
                .map(|ur| {
                    interp
                        .iter()
                        .map(|row| row.iter().zip(ur).map(|(a, b)| a * b).sum())
                        .collect()
                })
                .collect();
            let vals: Vec<Vec<f64>> = coeffs
                .iter()
                .map(|c| {
                    (0..g)
                        .map(|q| c.iter().zip(&ug).map(|(d, u)| d * u[q]).sum())
                        .collect()
                })
                .collect();
            for (a, va) in vals.iter().enumerate() {
                for (b, vb) in vals.iter().enumerate().take(a + 1) {
                    let s: f64 = (0..g).map(|q| rule[q].1 * va[q] * vb[q]).sum();
                    band.add(act.start + a, act.start + b, half * s);
                }
            }
        }
    }
    GramMatrix::from_band(band)
}

/// Geometric decay fit `|a_ij| (α_i + α_j) ≈ C q^{|i-j|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub c: f64,
    pub q: f64,
    pub entries: usize,
}

/// Lebesgue function samples and the operator norm estimate.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub samples: Vec<(f64, f64)>,
    pub norm: f64,
    pub argmax: f64,
    pub at_a: f64,
    pub at_b: f64,
    pub decay: Option<DecayFit>,
    pub intervals: usize,
    pub mesh: f64,
}

/// Grid density and refinement of [`ProjectionOperator::lebesgue_norm`].
#[derive(Debug, Clone, Copy)]
pub struct NormOptions {
    /// Chebyshev points per interval; `None` means `2k + 3`.
    pub points_per_interval: Option<usize>,
    /// Number of largest samples refined by golden-section search.
    pub refine: usize,
    pub parallel: bool,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            points_per_interval: None,
            refine: 8,
            parallel: true,
        }
    }
}

/// The orthogonal projector `P_Δ` onto the spline space.
#[derive(Debug, Clone)]
pub struct ProjectionOperator {
    basis: BSplineBasis,
    gram: GramMatrix,
    beta: Vec<Vec<f64>>,
}

impl ProjectionOperator {
    pub fn new(basis: BSplineBasis) -> Result<Self> {
        let gram = assemble_gram(&basis)?;
        let beta = gram.inverse();
        Ok(Self { basis, gram, beta })
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// Entries `β_ij` of the inverse Gram matrix.
    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    /// Entries `a_ij = β_ij / (α_i α_j)` of the inverse of `(⟨N_i, N_j⟩)`.
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.beta[i][j] / (self.basis.alpha(i) * self.basis.alpha(j))
    }

    /// `⟨f, M_i⟩` for all `i`.
    pub fn moments(&self, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<Vec<f64>> {
        let basis = &self.basis;
        let k = basis.order();
        let sp = basis.space();
        let g = quad::gauss_order(k).max(24);
        let interp = quad::cheb_to_gauss(g);
        let rule = quad::gauss_legendre(g);
        let mut out = vec![0.0; basis.dim()];
        for m in 0..basis.partition().intervals() {
            let act = sp.active(k, m);
            for panel in sp.panels(m) {
                let (mid, half) = (0.5 * (panel.lo + panel.hi), 0.5 * (panel.hi - panel.lo));
                let fw: Vec<f64> = rule
                    .iter()
                    .map(|(x, w)| w * half * f(mid + half * x))
                    .collect();
                for j in act.clone() {
                    let c = sp.spline(k, j).on(m);
                    if c.is_empty() {
                        continue;
                    }
                    let mut s = 0.0;
                    for (q, row) in interp.iter().enumerate() {
                        let mut v = 0.0;
                        for (r, d) in c.iter().enumerate() {
                            v += d * row.iter().zip(&panel.u[r]).map(|(a, b)| a * b).sum::<f64>();
                        }
                        s += fw[q] * v;
                    }
                    out[j] += s;
                }
            }
        }
        Ok(out)
    }

    /// B-spline coefficients of `P f`.
    pub fn project(&self, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<Vec<f64>> {
        Ok(self.gram.solve(&self.moments(f)?))
    }

    /// `K(τ, t) = Σ β_ij M_i(τ) M_j(t)`.
    pub fn dirichlet_kernel(&self, tau: f64, t: f64) -> Result<f64> {
        let c = self.kernel_coefficients(tau, None)?;
        self.basis.eval_spline(&c, t)
    }

    /// B-spline coefficients of `t ↦ K(τ, t)`; `interval` selects a one-sided
    /// limit at a breakpoint.
    pub fn kernel_coefficients(&self, tau: f64, interval: Option<usize>) -> Result<Vec<f64>> {
        let k = self.basis.order();
        let m = match interval {
            Some(m) => m,
            None => self.basis.partition().locate(tau)?,
        };
        let (first, vals) = self.basis.space().eval_active_on(k, m, tau)?;
        let mut c = vec![0.0; self.basis.dim()];
        for (q, v) in vals.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            for (ci, b) in c.iter_mut().zip(&self.beta[first + q]) {
                *ci += v * b;
            }
        }
        Ok(c)
    }

    /// Lebesgue function `∫ |K(τ, t)| dt`.
    pub fn lebesgue(&self, tau: f64) -> Result<f64> {
        Ok(self.l1_norm(&self.kernel_coefficients(tau, None)?))
    }

    /// Lebesgue function using the representation on interval `m`.
    pub fn lebesgue_on(&self, tau: f64, m: usize) -> Result<f64> {
        Ok(self.l1_norm(&self.kernel_coefficients(tau, Some(m))?))
    }

    /// `∫ |Σ c_i M_i|`, splitting each panel at the sign changes.
    pub fn l1_norm(&self, c: &[f64]) -> f64 {
        let basis = &self.basis;
        let k = basis.order();
        let sp = basis.space();
        let cr = cheb();
        let mut total = 0.0;
        for m in 0..basis.partition().intervals() {
            let mut e = vec![0.0; k];
            for j in sp.active(k, m) {
                if c[j] == 0.0 {
                    continue;
                }
                for (er, d) in e.iter_mut().zip(sp.spline(k, j).on(m)) {
                    *er += c[j] * d;
                }
            }
            if e.iter().all(|v| *v == 0.0) {
                continue;
            }
            for panel in sp.panels(m) {
                let mut kv = [0.0; N];
                let mut fv = [0.0; N];
                for r in 0..k {
                    for i in 0..N {
                        kv[i] += e[r] * panel.u[r][i];
                        fv[i] += e[r] * panel.anti[r][i];
                    }
                }
                let mut prev = fv[0];
                let mut sum = 0.0;
                for i in 0..N - 1 {
                    if kv[i + 1] == 0.0 {
                        sum += (fv[i + 1] - prev).abs();
                        prev = fv[i + 1];
                    } else if kv[i] * kv[i + 1] < 0.0 {
                        let s = bisect(&kv, cr.nodes[i], cr.nodes[i + 1], kv[i]);
                        let f = cr.interpolate(&fv, s);
                        sum += (f - prev).abs();
                        prev = f;
                    }
                }
                sum += (fv[N - 1] - prev).abs();
                total += sum;
            }
        }
        total
    }

    /// Lebesgue function on breakpoints (both one-sided limits), Chebyshev
    /// points inside every interval, refined around the largest samples.
    pub fn lebesgue_norm(&self, opts: &NormOptions) -> Result<NormReport> {
        let part = self.basis.partition();
        let k = self.basis.order();
        let p = opts.points_per_interval.unwrap_or(2 * k + 3);
        let mut grid: Vec<(f64, usize)> = Vec::new();
        for m in 0..part.intervals() {
            let (lo, hi) = part.grid_interval(m);
            grid.push((lo, m));
            for i in 0..p {
                let c = -((2 * i + 1) as f64 * std::f64::consts::PI / (2 * p) as f64).cos();
                grid.push((0.5 * (lo + hi) + 0.5 * (hi - lo) * c, m));
            }
            grid.push((hi, m));
        }
        let eval = |&(t, m): &(f64, usize)| self.lebesgue_on(t, m).map(|v| (t, v));
        let mut samples: Vec<(f64, f64)> = if opts.parallel {
            grid.par_iter().map(eval).collect::<Result<_>>()?
        } else {
            grid.iter().map(eval).collect::<Result<_>>()?
        };
        // Golden-section refinement between the neighbours of the top samples.
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&x, &y| samples[y].1.total_cmp(&samples[x].1).then(x.cmp(&y)));
        let refine = |&idx: &usize| -> Result<(f64, f64)> {
            let (t, m) = grid[idx];
            let (lo, hi) = part.grid_interval(m);
            let left = if idx > 0 && grid[idx - 1].1 == m { grid[idx - 1].0 } else { lo };
            let right = if idx + 1 < grid.len() && grid[idx + 1].1 == m {
                grid[idx + 1].0
            } else {
                hi
            };
            golden_max(|x| self.lebesgue_on(x, m), left.min(t), right.max(t))
        };
        let top: Vec<usize> = order.into_iter().take(opts.refine).collect();
        let extra: Vec<(f64, f64)> = if opts.parallel {
            top.par_iter().map(refine).collect::<Result<_>>()?
        } else {
            top.iter().map(refine).collect::<Result<_>>()?
        };
        samples.extend(extra);
        let (argmax, norm) = samples
            .iter()
            .copied()
            .fold((f64::NAN, f64::NEG_INFINITY), |acc, s| if s.1 > acc.1 { s } else { acc });
        let at_a = samples[0].1;
        let at_b = samples[grid.len() - 1].1;
        Ok(NormReport {
            samples,
            norm,
            argmax,
            at_a,
            at_b,
            decay: self.decay_fit().ok(),
            intervals: part.intervals(),
            mesh: part.mesh(),
        })
    }

    /// Least-squares fit of `log(|a_ij| (α_i + α_j))` against `|i - j|`.
    pub fn decay_fit(&self) -> Result<DecayFit> {
        let n = self.basis.dim();
        let alpha = self.basis.alphas();
        let max = self
            .beta
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let mut pts = Vec::new();
        let mut off = false;
        for i in 0..n {
            for j in 0..n {
                if self.beta[i][j].abs() > NOISE_FLOOR * max {
                    let a = self.a(i, j).abs() * (alpha[i] + alpha[j]);
                    pts.push((i.abs_diff(j) as f64, a.ln()));
                    off |= i != j;
                }
            }
        }
        if !off {
            let c = pts.iter().map(|p| p.1.exp()).fold(0.0, f64::max);
            return Ok(DecayFit {
                c,
                q: 0.0,
                entries: pts.len(),
            });
        }
        let len = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let distinct = {
            let mut d: Vec<u64> = pts.iter().map(|p| p.0 as u64).collect();
            d.sort_unstable();
            d.dedup();
            d.len()
        };
        if distinct < 3 {
            return Err(Error::FitUnavailable(format!(
                "only {distinct} distinct off-diagonal distances above the noise floor"
            )));
        }
        let slope = sxy / sxx;
        Ok(DecayFit {
            c: (my - slope * mx).exp(),
            q: slope.exp(),
            entries: pts.len(),
        })
    }

    /// Entries violating `sgn β_ij = (-1)^{i+j}` above the sign floor.
    pub fn checkerboard_violations(&self) -> Vec<(usize, usize)> {
        let max = self
            .beta
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let mut bad = Vec::new();
        for (i, row) in self.beta.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                if v.abs() > SIGN_FLOOR * max && v * want <= 0.0 {
                    bad.push((i, j));
                }
            }
        }
        bad
    }
}

/// Root of the Chebyshev interpolant of `vals` in `[lo, hi]`, where `f(lo)` has sign of `flo`.
///
/// Illinois iteration. The root only enters through `∫|K|`, whose error is
/// quadratic in the root error, so a bracket of `1e-10` is far below roundoff.
fn bisect(vals: &[f64; N], mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let cr = cheb();
    let (mut flo, mut fhi) = (flo, cr.interpolate(vals, hi));
    if fhi == 0.0 {
        return hi;
    }
    let mut side = 0i8;
    for _ in 0..60 {
        if hi - lo < 1e-10 {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let v = cr.interpolate(vals, x);
        if v == 0.0 {
            return x;
        }
        if (v > 0.0) == (flo > 0.0) {
            lo = x;
            flo = v;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = v;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..30 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}
