//! The boundary spline `σ` of order `2k - 1`, the conserved quantity `H` and
//! the order-`k` spline `φ` whose inner products with the B-splines alternate.
//!
//! Weights are written 1-based here, `w_1, ..., w_k`, with `w_{k+1} ≡ 1` and
//! `D_j f = D(f / w_j)`. The operator annihilating `σ` on each grid interval
//! is `D_k ... D_2 D_2 ... D_k D_{k+1}`; applied right to left it divides by
//! `1, w_k, ..., w_2, w_2, ..., w_k` in turn, so it is the top operator of the
//! ECT system with exactly these weights, and `S_i = L_i` for that system.

use std::sync::Arc;

use crate::banded::Band;
use crate::bspline::{BSplineBasis, SplineSpace};
use crate::ect::weights::Constant;
use crate::ect::{EctSystem, Preset, Weight, WeightFn, WeightSystem};
use crate::error::{Error, Result};
use crate::jet;
use crate::partition::Partition;
use crate::projection::ProjectionOperator;
use crate::quad;

/// Largest tolerated residual of the kernel check.
pub const KERNEL_TOLERANCE: f64 = 1e-7;

/// The weights `(1, w_k, ..., w_2, w_2, ..., w_k)` for a system `(w_1, ..., w_k)`.
#[derive(Debug, Clone)]
pub struct SigmaSystem {
    weights: WeightSystem,
    sigma: WeightSystem,
    kernel_residual: f64,
}

impl SigmaSystem {
    /// `k` of the underlying system.
    pub fn order(&self) -> usize {
        self.weights.order()
    }

    /// `2k - 1`.
    pub fn sigma_order(&self) -> usize {
        self.sigma.order()
    }

    pub fn weights(&self) -> &WeightSystem {
        &self.weights
    }

    pub fn sigma_weights(&self) -> &WeightSystem {
        &self.sigma
    }

    /// Largest scaled residual of the composed operator on the generalized monomials.
    pub fn kernel_residual(&self) -> f64 {
        self.kernel_residual
    }

    /// `w_j(x)` for `j = 1, ..., k + 1`.
    fn w(&self, j: usize, x: f64) -> f64 {
        if j == self.order() + 1 {
            1.0
        } else {
            self.weights.weight(j - 1).value(x)
        }
    }
}

/// Indices `j` of the operators `D_j` in the order they are applied:
/// `k + 1, k, ..., 2, 2, ..., k`.
fn operator_sequence(k: usize) -> Vec<usize> {
    let mut seq = vec![k + 1];
    seq.extend((2..=k).rev());
    seq.extend(2..=k);
    seq
}

pub fn derive_sigma_weights(weights: &WeightSystem) -> Result<SigmaSystem> {
    let k = weights.order();
    if k < 2 {
        return Err(Error::Unsupported(
            "the boundary spline needs order k >= 2; for k = 1 the projector is an average".into(),
        ));
    }
    let w = weights.weights();
    let mut v: Vec<Weight> = vec![Arc::new(Constant(1.0))];
    v.extend(w[1..].iter().rev().cloned());
    v.extend(w[1..].iter().cloned());
    let (a, b) = weights.interval();
    let sigma = WeightSystem::unchecked(a, b, v, Preset::Derived(format!("sigma-{}", weights.tag())))?;
    let mut sys = SigmaSystem {
        weights: weights.clone(),
        sigma,
        kernel_residual: 0.0,
    };
    sys.kernel_residual = kernel_residual(&sys)?;
    if !(sys.kernel_residual <= KERNEL_TOLERANCE) {
        return Err(Error::Internal(format!(
            "derived weights do not span the kernel: residual {:e}",
            sys.kernel_residual
        )));
    }
    Ok(sys)
}

/// Applies `D_k ... D_2 D_2 ... D_{k+1}`, built from the original weights,
/// to the jets of the monomials generated by the derived weights.
fn kernel_residual(sys: &SigmaSystem) -> Result<f64> {
    let k = sys.order();
    let kk = sys.sigma_order();
    let (a, b) = sys.weights.interval();
    let ect = EctSystem::new(sys.sigma.clone())?;
    let seq = operator_sequence(k);
    let mut worst = 0.0f64;
    for i in 0..kk {
        for s in 1..=5 {
            let x = a + (b - a) * s as f64 / 6.0;
            let mut f = ect.jet(i, x, kk)?;
            let mut scale = f[0].abs();
            for &j in &seq {
                let wj = if j == k + 1 {
                    jet::constant(1.0, f.len() - 1)
                } else {
                    WeightFn::jet(sys.weights.weight(j - 1).as_ref(), x, f.len() - 1)?
                };
                f = jet::deriv(&jet::div(&f, &wj));
                scale = scale.max(f[0].abs());
            }
            worst = worst.max(f[0].abs() / scale.max(1.0));
        }
    }
    Ok(worst)
}

/// `σ = Σ a_e M_e` over the order-`(2k - 1)` B-splines. The b-endpoint variant
/// lives on the reflected interval and reflected weights; its methods take
/// points in that reflected frame.
#[derive(Debug, Clone)]
pub struct SigmaSpline {
    system: SigmaSystem,
    space: SplineSpace,
    coeffs: Vec<f64>,
    /// Top-order local coefficients per grid interval.
    local: Vec<Vec<f64>>,
    reflected: bool,
}

/// Construction with the normalization at `a`.
pub fn build_sigma(sys: &SigmaSystem, partition: &Partition) -> Result<SigmaSpline> {
    SigmaSpline::build(sys, partition, false)
}

/// The variant normalized at `b`, constructed by reflection.
pub fn build_sigma_at_b(weights: &WeightSystem, partition: &Partition) -> Result<SigmaSpline> {
    let sys = derive_sigma_weights(&weights.reflected())?;
    SigmaSpline::build(&sys, &partition.reflected(), true)
}

impl SigmaSpline {
    fn build(sys: &SigmaSystem, partition: &Partition, reflected: bool) -> Result<Self> {
        let k = sys.order();
        let kk = sys.sigma_order();
        let part = partition.with_order(kk)?;
        let space = SplineSpace::new(sys.sigma.weights(), &part)?;
        let (a, b) = part.interval();
        let m = part.intervals();
        let n = space.count(kk);
        let mut coeffs = vec![0.0; n];

        // At a: L_d M_e(a) vanishes for e > d, so rows d = 0..k-1 are lower triangular.
        for d in 0..k {
            let mut r = if d == k - 1 { 1.0 } else { 0.0 };
            for (e, c) in coeffs.iter().enumerate().take(d) {
                r -= c * space.operator_on(kk, e, d, 0, a)?;
            }
            let diag = space.operator_on(kk, d, d, 0, a)?;
            if diag == 0.0 {
                return Err(Error::Singular(format!("L_{d} M_{d}(a) vanishes")));
            }
            coeffs[d] = r / diag;
        }
        // At b: L_d M_{n-1-e}(b) vanishes for e > d; the right-hand side is zero.
        for d in 0..k - 1 {
            let mut r = 0.0;
            for e in 0..d {
                r -= coeffs[n - 1 - e] * space.operator_on(kk, n - 1 - e, d, m - 1, b)?;
            }
            let diag = space.operator_on(kk, n - 1 - d, d, m - 1, b)?;
            if diag == 0.0 {
                return Err(Error::Singular(format!("L_{d} M_{}(b) vanishes", n - 1 - d)));
            }
            coeffs[n - 1 - d] = r / diag;
        }

        // σ(τ_j) = 0 at the interior breakpoints for the coefficients k..=n-k.
        let unknowns = m - 1;
        if unknowns > 0 {
            let mut mat = Band::zeros(unknowns, kk, kk);
            let mut rhs = vec![0.0; unknowns];
            for j in 1..m {
                let tau = part.breakpoints()[j];
                let (first, vals) = space.eval_active_on(kk, j, tau)?;
                for (q, val) in vals.iter().enumerate() {
                    let e = first + q;
                    if (k..=n - k).contains(&e) {
                        mat.set(j - 1, e - k, *val);
                    } else {
                        rhs[j - 1] -= coeffs[e] * val;
                    }
                }
            }
            let sol = mat.solve(&rhs).map_err(|e| {
                Error::Interlacing {
                    index: 0,
                    detail: format!("collocation at the interior breakpoints failed: {e}"),
                }
            })?;
            coeffs[k..=n - k].copy_from_slice(&sol);
        }

        let local = (0..m)
            .map(|mi| {
                let mut c = vec![0.0; kk];
                for e in space.active(kk, mi) {
                    for (acc, v) in c.iter_mut().zip(space.spline(kk, e).on(mi)) {
                        *acc += coeffs[e] * v;
                    }
                }
                c
            })
            .collect();
        Ok(Self {
            system: sys.clone(),
            space,
            coeffs,
            local,
            reflected,
        })
    }

    pub fn system(&self) -> &SigmaSystem {
        &self.system
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn partition(&self) -> &Partition {
        self.space.partition()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// `S_d σ(x)` from the representation on interval `m`.
    pub fn s_on(&self, d: usize, m: usize, x: f64) -> Result<f64> {
        let kk = self.system.sigma_order();
        if d >= kk {
            return Err(Error::Config(format!("S_{d} exceeds the order {kk}")));
        }
        let t = self.space.table(m);
        let loc = t.locate(x)?;
        let w = self.space.weights()[d].value(x);
        Ok(self.local[m]
            .iter()
            .enumerate()
            .skip(d)
            .map(|(r, c)| c * w * t.chain_at(&loc, d + 1, r))
            .sum())
    }

    pub fn s(&self, d: usize, x: f64) -> Result<f64> {
        self.s_on(d, self.partition().locate(x)?, x)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.s(0, x)
    }

    /// `S_0 σ, ..., S_{2k-2} σ` at `x` on interval `m`.
    fn all_s_on(&self, m: usize, x: f64) -> Result<Vec<f64>> {
        (0..self.system.sigma_order())
            .map(|d| self.s_on(d, m, x))
            .collect()
    }

    /// `H = (S_{k-1}σ / w_2)² + 2 Σ_q (-1)^q (S_{k-1-q}σ / w_{q+2}) (S_{k-1+q}σ / w_{q+1})`.
    pub fn h_on(&self, m: usize, t: f64) -> Result<f64> {
        let k = self.system.order();
        let s = self.all_s_on(m, t)?;
        let sys = &self.system;
        let mut h = (s[k - 1] / sys.w(2, t)).powi(2);
        for q in 1..k {
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            h += 2.0 * sign * (s[k - 1 - q] / sys.w(q + 2, t)) * (s[k - 1 + q] / sys.w(q + 1, t));
        }
        Ok(h)
    }

    pub fn eval_h(&self, t: f64) -> Result<f64> {
        self.h_on(self.partition().locate(t)?, t)
    }

    /// `1 / w_2(a)²`, the value of `H` at the normalized endpoint.
    pub fn h_expected(&self) -> f64 {
        let a = self.partition().interval().0;
        self.system.w(2, a).powi(-2)
    }

    /// Largest relative deviation `|H - H(a)| / H(a)` over `samples` interior
    /// points per interval and both one-sided limits at every breakpoint.
    pub fn h_deviation(&self, samples: usize) -> Result<f64> {
        let h0 = self.h_expected();
        let mut worst = 0.0f64;
        for m in 0..self.partition().intervals() {
            let (lo, hi) = self.partition().grid_interval(m);
            for s in 0..=samples + 1 {
                let x = lo + (hi - lo) * s as f64 / (samples + 1) as f64;
                worst = worst.max((self.h_on(m, x)? - h0).abs() / h0);
            }
        }
        Ok(worst)
    }

    /// `L_{k-1} σ(a)`, normalized to one.
    pub fn normalization(&self) -> Result<f64> {
        let a = self.partition().interval().0;
        self.s_on(self.system.order() - 1, 0, a)
    }

    /// `max_j |σ(τ_j)|` over the interior breakpoints and `σ(b)`, relative to the sampled `‖σ‖∞`.
    pub fn zero_residual(&self) -> Result<f64> {
        let p = self.partition();
        let mut worst = 0.0f64;
        for (j, &t) in p.breakpoints().iter().enumerate().skip(1) {
            worst = worst.max(self.s_on(0, j - 1, t)?.abs());
        }
        Ok(worst / self.sup_norm(64)?)
    }

    pub fn sup_norm(&self, samples: usize) -> Result<f64> {
        let mut best = 0.0f64;
        for m in 0..self.partition().intervals() {
            let (lo, hi) = self.partition().grid_interval(m);
            for s in 1..=samples {
                let x = lo + (hi - lo) * s as f64 / (samples + 1) as f64;
                best = best.max(self.s_on(0, m, x)?.abs());
            }
        }
        Ok(best)
    }

    /// Dense scan for the sign pattern `sgn σ = (-1)^m` on interval `m`.
    pub fn sign_scan(&self, samples: usize) -> Result<SignScan> {
        let mut scan = SignScan::default();
        for m in 0..self.partition().intervals() {
            let (lo, hi) = self.partition().grid_interval(m);
            let expect = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut prev = 0.0f64;
            for s in 1..=samples {
                let x = lo + (hi - lo) * s as f64 / (samples + 1) as f64;
                let v = self.s_on(0, m, x)?;
                if v * expect <= 0.0 {
                    scan.wrong_sign += 1;
                }
                if prev * v < 0.0 {
                    scan.interior_changes += 1;
                }
                prev = v;
            }
        }
        Ok(scan)
    }

    /// `r_m = ∫_{I_m} |σ| / |I_m|^k` per interval.
    pub fn l1_profile(&self) -> Result<Vec<f64>> {
        let k = self.system.order() as i32;
        let p = self.partition();
        let g = quad::gauss_order(2 * self.system.order());
        (0..p.intervals())
            .map(|m| {
                let (lo, hi) = p.grid_interval(m);
                let mut s = 0.0;
                for w in p.panel_breaks(lo, hi).windows(2) {
                    for (x, wt) in quad::mapped_rule(w[0], w[1], g) {
                        s += wt * self.s_on(0, m, x)?.abs();
                    }
                }
                Ok(s / (hi - lo).powi(k))
            })
            .collect()
    }
}

/// Outcome of [`SigmaSpline::sign_scan`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignScan {
    /// Samples where `σ` has the wrong sign or vanishes.
    pub wrong_sign: usize,
    /// Sign changes between consecutive samples of one interval.
    pub interior_changes: usize,
}

impl SignScan {
    pub fn ok(&self) -> bool {
        self.wrong_sign == 0 && self.interior_changes == 0
    }
}

pub fn eval_h(sigma: &SigmaSpline, t: f64) -> Result<f64> {
    sigma.eval_h(t)
}

pub fn sigma_l1_profile(sigma: &SigmaSpline) -> Result<Vec<f64>> {
    sigma.l1_profile()
}

/// `φ = (w_1 / w_2) S_{k-1} σ`, an order-`k` spline of the original system.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    sigma: SigmaSpline,
    /// Coefficients of `S_{k-1} σ` in the order-`k` splines of the σ space.
    coeffs: Vec<f64>,
    /// `⟨φ, M_i⟩` for the original basis, in the original frame.
    inner: Vec<f64>,
}

pub fn build_phi(sigma: &SigmaSpline, basis: &BSplineBasis) -> Result<PhiFunction> {
    PhiFunction::new(sigma, basis)
}

impl PhiFunction {
    pub fn new(sigma: &SigmaSpline, basis: &BSplineBasis) -> Result<Self> {
        let k = sigma.system.order();
        let kk = sigma.system.sigma_order();
        if basis.order() != k {
            return Err(Error::Config(format!(
                "basis of order {} for a boundary spline of order {k}",
                basis.order()
            )));
        }
        let own = sigma.partition().breakpoints();
        let orig = basis.partition().breakpoints();
        let (a, b) = basis.partition().interval();
        let n = orig.len();
        let same = own.len() == n
            && own.iter().enumerate().all(|(i, s)| {
                let t = if sigma.reflected { a + b - orig[n - 1 - i] } else { orig[i] };
                (s - t).abs() <= 1e-12 * (b - a)
            });
        if !same {
            return Err(Error::Config("σ and the basis use different partitions".into()));
        }
        let sp = &sigma.space;
        let mut coeffs = vec![0.0; sp.count(k)];
        for (e, ae) in sigma.coeffs.iter().enumerate() {
            if *ae == 0.0 {
                continue;
            }
            for (q, beta) in sp.derivative_coefficients(kk - k, e).iter().enumerate() {
                coeffs[e + q] += ae * beta;
            }
        }
        let mut phi = Self {
            sigma: sigma.clone(),
            coeffs,
            inner: Vec::new(),
        };
        phi.inner = phi.inner_products(basis)?;
        Ok(phi)
    }

    pub fn sigma(&self) -> &SigmaSpline {
        &self.sigma
    }

    fn frame(&self, x: f64) -> f64 {
        if self.sigma.reflected {
            let (a, b) = self.sigma.partition().interval();
            a + b - x
        } else {
            x
        }
    }

    /// `φ(y)` at a point `y` of the σ frame, on interval `m`.
    fn eval_frame(&self, m: usize, y: f64) -> Result<f64> {
        let k = self.sigma.system.order();
        let (first, vals) = self.sigma.space.eval_active_on(k, m, y)?;
        let s: f64 = vals.iter().enumerate().map(|(q, v)| self.coeffs[first + q] * v).sum();
        let ws = self.sigma.system.weights();
        Ok(ws.weight(0).value(y) / ws.weight(1).value(y) * s)
    }

    /// `φ(x)` for `x` in the original frame.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let y = self.frame(x);
        self.eval_frame(self.sigma.partition().locate(y)?, y)
    }

    /// `(w_1 / w_2) S_{k-1} σ` evaluated directly from `σ`, for comparison.
    pub fn eval_direct(&self, x: f64) -> Result<f64> {
        let y = self.frame(x);
        let ws = self.sigma.system.weights();
        let s = self.sigma.s(self.sigma.system.order() - 1, y)?;
        Ok(ws.weight(0).value(y) / ws.weight(1).value(y) * s)
    }

    fn inner_products(&self, basis: &BSplineBasis) -> Result<Vec<f64>> {
        let k = basis.order();
        let p = basis.partition();
        let sp = basis.space();
        let g = quad::gauss_order(2 * k);
        let mut out = vec![0.0; basis.dim()];
        for m in 0..p.intervals() {
            let (lo, hi) = p.grid_interval(m);
            let mf = if self.sigma.reflected { p.intervals() - 1 - m } else { m };
            for w in p.panel_breaks(lo, hi).windows(2) {
                for (x, wt) in quad::mapped_rule(w[0], w[1], g) {
                    let f = wt * self.eval_frame(mf, self.frame(x))?;
                    let (first, vals) = sp.eval_active_on(k, m, x)?;
                    for (q, v) in vals.iter().enumerate() {
                        out[first + q] += f * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `⟨φ, M_i⟩`.
    pub fn inner(&self) -> &[f64] {
        &self.inner
    }

    /// Indices where `(-1)^i ⟨φ, M_i⟩ > 0` fails (`(-1)^{n-i}` for the b variant).
    pub fn alternation_violations(&self) -> Vec<usize> {
        let n = self.inner.len();
        (0..n)
            .filter(|&i| {
                let p = if self.sigma.reflected { n - 1 - i } else { i };
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                !(sign * self.inner[i] > 0.0)
            })
            .collect()
    }

    pub fn min_abs_inner(&self) -> f64 {
        self.inner.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// The normalized endpoint, `a`, or `b` for the reflected variant.
    pub fn endpoint(&self) -> f64 {
        let (a, b) = self.sigma.partition().interval();
        if self.sigma.reflected {
            b
        } else {
            a
        }
    }

    /// `w_1 / w_2` at the normalized endpoint, the value `φ` takes there.
    pub fn endpoint_value(&self) -> f64 {
        let ws = self.sigma.system.weights();
        let a = self.sigma.partition().interval().0;
        ws.weight(0).value(a) / ws.weight(1).value(a)
    }

    /// `(Σ_i c_i ⟨φ, M_i⟩, w_1/w_2)` with `c_i` the coefficients of `K(endpoint, ·)`;
    /// the two agree because `φ` lies in the spline space.
    pub fn endpoint_identity(&self, projection: &ProjectionOperator) -> Result<(f64, f64)> {
        let m = if self.sigma.reflected {
            projection.basis().partition().intervals() - 1
        } else {
            0
        };
        let c = projection.kernel_coefficients(self.endpoint(), Some(m))?;
        let lhs = c.iter().zip(&self.inner).map(|(a, b)| a * b).sum();
        Ok((lhs, self.endpoint_value()))
    }
}
