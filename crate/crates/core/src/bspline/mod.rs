//! Chebyshevian B-splines `M_i`, their renormalizations `N_i = α_i M_i`,
//! derivatives, dual functionals and Hermite interpolation.

pub mod dual;
pub mod engine;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::banded::Band;
use crate::divided_diff::{divided_difference, KnotTuple};
use crate::ect::{DualSystem, Weight, WeightSystem};
use crate::error::{Error, Result};
use crate::partition::Partition;
pub use dual::{Cutoff, DualFunctional, LocalPhi};
pub use engine::{LocalSpline, SplineSpace, SubPanel};

#[derive(Debug, Clone)]
pub struct BSplineBasis {
    weights: WeightSystem,
    space: Arc<SplineSpace>,
    dual: DualSystem,
    alphas: Vec<f64>,
    cutoff: Cutoff,
}

impl BSplineBasis {
    pub fn new(partition: &Partition, weights: &WeightSystem) -> Result<Self> {
        Self::with_cutoff(partition, weights, Cutoff::default())
    }

    pub fn with_cutoff(partition: &Partition, weights: &WeightSystem, cutoff: Cutoff) -> Result<Self> {
        let k = weights.order();
        if partition.order() != k {
            return Err(Error::Config(format!(
                "partition of order {} for {k} weights",
                partition.order()
            )));
        }
        let (a, b) = weights.interval();
        let (pa, pb) = partition.interval();
        let tol = 1e-12 * (b - a);
        if (a - pa).abs() > tol || (b - pb).abs() > tol {
            return Err(Error::Config(format!(
                "partition [{pa}, {pb}] and weights [{a}, {b}] differ"
            )));
        }
        let space = Arc::new(SplineSpace::new(weights.weights(), partition)?);
        let dual = DualSystem::new(weights)?;
        let mut basis = Self {
            weights: weights.clone(),
            space,
            dual,
            alphas: Vec::new(),
            cutoff,
        };
        basis.alphas = (0..partition.dim())
            .map(|i| basis.compute_alpha(i))
            .collect::<Result<_>>()?;
        Ok(basis)
    }

    pub fn order(&self) -> usize {
        self.weights.order()
    }

    pub fn dim(&self) -> usize {
        self.space.partition().dim()
    }

    pub fn partition(&self) -> &Partition {
        self.space.partition()
    }

    pub fn weights(&self) -> &WeightSystem {
        &self.weights
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn dual_system(&self) -> &DualSystem {
        &self.dual
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    fn dual_weights(&self) -> &[Weight] {
        self.dual.weights().weights()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::Config(format!(
                "B-spline index {i} outside 0..{}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `M_i(x)`.
    pub fn m(&self, i: usize, x: f64) -> Result<f64> {
        self.check_index(i)?;
        self.space.eval(self.order(), i, x)
    }

    /// `N_i(x) = α_i M_i(x)`.
    pub fn n(&self, i: usize, x: f64) -> Result<f64> {
        Ok(self.alphas[i] * self.m(i, x)?)
    }

    /// First index and values of the `k` B-splines that may be nonzero at `x`.
    pub fn eval_all(&self, x: f64) -> Result<(usize, Vec<f64>)> {
        self.space.eval_active(self.order(), x)
    }

    /// `Σ c_i M_i(x)`.
    pub fn eval_spline(&self, coeffs: &[f64], x: f64) -> Result<f64> {
        let (first, vals) = self.eval_all(x)?;
        Ok(vals.iter().enumerate().map(|(q, v)| coeffs[first + q] * v).sum())
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.alphas[i]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Replaces `α_i`; only meant for self-tests of the verification suite.
    #[doc(hidden)]
    pub fn corrupt_alpha(&mut self, i: usize, factor: f64) {
        self.alphas[i] *= factor;
    }

    /// `φ_{i,r}` over the whole interval.
    pub fn phi(&self, i: usize, r: usize) -> Result<LocalPhi> {
        let k = self.order();
        if r == 0 || r > k + 1 {
            return Err(Error::Config(format!("φ order {r} outside 1..={}", k + 1)));
        }
        self.check_index(i)?;
        let t = self.partition().knots();
        let (a, b) = self.partition().interval();
        let zeros = &t[i..i + r - 1];
        LocalPhi::new(self.dual_weights(), self.partition(), t[i], a, b, zeros)
    }

    /// `φ_{i,r}(s)`.
    pub fn phi_ir(&self, i: usize, r: usize, s: f64) -> Result<f64> {
        self.phi(i, r)?.eval(s)
    }

    fn support_phi(&self, i: usize, first_zero: usize) -> Result<LocalPhi> {
        let k = self.order();
        let t = self.partition().knots();
        LocalPhi::new(
            self.dual_weights(),
            self.partition(),
            t[i],
            t[i],
            t[i + k],
            &t[first_zero..i + k],
        )
    }

    /// `α_i = L*_μ φ_{i,k+1}(t_{i+k}) / L*_μ φ_{i+1,k}(t_{i+k})`, where `μ` is the
    /// multiplicity of `t_{i+k}` among `t_{i+1}, ..., t_{i+k-1}`.
    fn compute_alpha(&self, i: usize) -> Result<f64> {
        let k = self.order();
        let t = self.partition().knots();
        let end = t[i + k];
        let mu = t[i + 1..i + k].iter().filter(|&&v| v == end).count();
        let num = self.support_phi(i, i)?.l_star(mu, end)?;
        let den = self.support_phi(i, i + 1)?.l_star(mu, end)?;
        let alpha = num / den;
        if !(num > 0.0 && den > 0.0 && alpha.is_finite()) {
            return Err(Error::DegenerateKnots(format!(
                "α_{i}: {num:e} / {den:e} on [{}, {end}]",
                t[i]
            )));
        }
        Ok(alpha)
    }

    /// `α_i` from the local partition-of-unity system on `J_i`.
    pub fn alpha_via_unity(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        let k = self.order();
        let m = self.partition().largest_in_support(i);
        let act = self.space.active(k, m);
        let mut a = DMatrix::<f64>::zeros(k, k);
        for (col, j) in act.clone().enumerate() {
            for (row, c) in self.space.spline(k, j).on(m).iter().enumerate() {
                a[(row, col)] = *c;
            }
        }
        let mut rhs = DVector::<f64>::zeros(k);
        rhs[0] = 1.0;
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("local coefficients on interval {m}")))?;
        Ok(sol[i - act.start])
    }

    /// Normalization `h_i` of `D_1 M_i = (M_i^{w̄} - M_{i+1}^{w̄}) / h_i`.
    pub fn h(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        if self.order() < 2 {
            return Err(Error::Unsupported("h_i needs order at least 2".into()));
        }
        Ok(self.space.spline(self.order(), i).h())
    }

    /// `h_i` as a difference of divided differences of `u*_{k}` with respect
    /// to the first `k` dual functions.
    pub fn h_via_divided_differences(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        let k = self.order();
        if k < 2 {
            return Err(Error::Unsupported("h_i needs order at least 2".into()));
        }
        let t = self.partition().knots();
        let f = self.dual.basis_fn(k);
        let right = divided_difference(&self.dual, &KnotTuple::new(t[i + 1..=i + k].to_vec())?, &f)?;
        let left = divided_difference(&self.dual, &KnotTuple::new(t[i..i + k].to_vec())?, &f)?;
        Ok(right - left)
    }

    fn not_at_knot(&self, x: f64) -> Result<()> {
        if self.partition().is_breakpoint(x) {
            return Err(Error::AtKnot { x });
        }
        Ok(())
    }

    /// `D_1 M_i(x) = (M_i / w_0)'(x)`.
    pub fn derivative_m(&self, i: usize, x: f64) -> Result<f64> {
        let h = self.h(i)?;
        self.not_at_knot(x)?;
        let k = self.order();
        let lo = self.space.eval(k - 1, i, x)?;
        let hi = self.space.eval(k - 1, i + 1, x)?;
        Ok((lo - hi) / h)
    }

    /// Coefficients `β_m` of `D_ℓ ... D_1 M_j = Σ_m β_m M_m^{(k-ℓ)}`, `m = j..=j+ℓ`.
    pub fn derivative_coefficients(&self, ell: usize, j: usize) -> Result<Vec<f64>> {
        self.check_index(j)?;
        if ell >= self.order() {
            return Err(Error::Config(format!(
                "derivative order {ell} must be below {}",
                self.order()
            )));
        }
        Ok(self.space.derivative_coefficients(ell, j))
    }

    /// `D_ℓ ... D_1 M_j(x)` through the lower-order expansion.
    pub fn iterated_derivative(&self, ell: usize, j: usize, x: f64) -> Result<f64> {
        let beta = self.derivative_coefficients(ell, j)?;
        if ell == 0 {
            return self.m(j, x);
        }
        self.not_at_knot(x)?;
        let lvl = self.order() - ell;
        let mut s = 0.0;
        for (q, b) in beta.iter().enumerate() {
            if *b != 0.0 {
                s += b * self.space.eval(lvl, j + q, x)?;
            }
        }
        Ok(s)
    }

    /// `L_d M_j(x)` directly from the local representation.
    pub fn operator_m(&self, d: usize, j: usize, x: f64) -> Result<f64> {
        self.check_index(j)?;
        self.not_at_knot(x)?;
        let m = self.partition().locate(x)?;
        self.space.operator_on(self.order(), j, d, m, x)
    }

    /// The dual functional `λ_i` in quadrature form.
    pub fn dual_functional(&self, i: usize) -> Result<DualFunctional> {
        self.check_index(i)?;
        let phi = self.support_phi(i, i + 1)?;
        let m = self.partition().largest_in_support(i);
        DualFunctional::build(
            i,
            m,
            &phi,
            self.dual_weights(),
            self.partition(),
            self.cutoff,
        )
    }

    /// `λ_i f`.
    pub fn dual_apply(&self, i: usize, f: &dyn Fn(f64) -> f64) -> Result<f64> {
        Ok(self.dual_functional(i)?.apply(f))
    }

    /// Coefficients `c` with `Σ c_i M_i(y_i) = v_i`, for `y_i ∈ (t_i, t_{i+k})`.
    pub fn hermite_interpolate(&self, points: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if points.len() != n || values.len() != n {
            return Err(Error::Config(format!(
                "{} points and {} values for dimension {n}",
                points.len(),
                values.len()
            )));
        }
        let k = self.order();
        let t = self.partition().knots();
        for (i, &y) in points.iter().enumerate() {
            if !(y > t[i] && y < t[i + k]) {
                return Err(Error::Interlacing {
                    index: i,
                    detail: format!("{y} not in ({}, {})", t[i], t[i + k]),
                });
            }
            if i > 0 && y <= points[i - 1] {
                return Err(Error::Interlacing {
                    index: i,
                    detail: "points must increase".into(),
                });
            }
        }
        let mut band = Band::zeros(n, k - 1, k - 1);
        for (i, &y) in points.iter().enumerate() {
            let (first, vals) = self.eval_all(y)?;
            for (q, v) in vals.iter().enumerate() {
                let j = first + q;
                if j + k > i && j < i + k {
                    band.set(i, j, *v);
                } else if *v != 0.0 {
                    return Err(Error::Internal(format!(
                        "M_{j}({y}) nonzero outside the collocation band"
                    )));
                }
            }
        }
        band.solve(values).map_err(|e| match e {
            Error::Singular(d) => Error::Interlacing { index: 0, detail: d },
            e => e,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(k: usize, breaks: Vec<f64>, w: &WeightSystem) -> BSplineBasis {
        BSplineBasis::new(&Partition::new(breaks, k).unwrap(), w).unwrap()
    }

    #[test]
    fn order_one_is_normalized_indicator() {
        let w = WeightSystem::constant(1, 0.0, 1.0).unwrap();
        let b = basis(1, vec![0.0, 0.2, 0.7, 1.0], &w);
        assert!((b.m(1, 0.3).unwrap() - 2.0).abs() < 1e-13);
        assert_eq!(b.m(1, 0.1).unwrap(), 0.0);
        assert!((b.alpha(1) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn hat_functions_for_order_two() {
        let w = WeightSystem::constant(2, 0.0, 1.0).unwrap();
        let b = basis(2, vec![0.0, 0.25, 0.5, 1.0], &w);
        // M_1 is the hat on [0, 0.5] peaking at 0.25 with height 2 / 0.5.
        assert!((b.m(1, 0.25).unwrap() - 4.0).abs() < 1e-12);
        assert!((b.m(1, 0.125).unwrap() - 2.0).abs() < 1e-12);
        // M_0 jumps at a.
        assert!((b.m(0, 0.0).unwrap() - 8.0).abs() < 1e-12);
        for i in 0..b.dim() {
            let (lo, hi) = b.partition().support(i);
            assert!((b.alpha(i) - (hi - lo) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_integrals_and_partition_of_unity() {
        let w = WeightSystem::exponential(&[0.8, -0.6, 1.2], 0.0, 1.0).unwrap();
        let b = basis(3, vec![0.0, 0.1, 0.35, 0.4, 0.8, 1.0], &w);
        for i in 0..b.dim() {
            assert!((b.space().integral(3, i) - 1.0).abs() < 1e-12);
            let via = b.alpha_via_unity(i).unwrap();
            assert!((via / b.alpha(i) - 1.0).abs() < 1e-9, "{i}: {via} {}", b.alpha(i));
        }
        for x in [0.0, 0.05, 0.37, 0.9, 1.0] {
            let s: f64 = (0..b.dim()).map(|i| b.n(i, x).unwrap()).sum();
            assert!((s - w.weight(0).value(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_paths_agree() {
        let w = WeightSystem::polynomial_perturbation(&[0.5, 1.0, 0.3], 0.0, 1.0).unwrap();
        let b = basis(3, vec![0.0, 0.2, 0.5, 0.6, 1.0], &w);
        for i in 0..b.dim() {
            let h = b.h(i).unwrap();
            let hd = b.h_via_divided_differences(i).unwrap();
            assert!((h / hd - 1.0).abs() < 1e-8, "{i}: {h} vs {hd}");
            for x in [0.1, 0.33, 0.55, 0.8] {
                let d = b.derivative_m(i, x).unwrap();
                assert!((d - b.operator_m(1, i, x).unwrap()).abs() < 1e-9 * (1.0 + d.abs()));
                for ell in 0..3 {
                    let it = b.iterated_derivative(ell, i, x).unwrap();
                    let direct = b.operator_m(ell, i, x).unwrap();
                    assert!((it - direct).abs() < 1e-8 * (1.0 + it.abs()));
                }
            }
        }
        assert!(matches!(b.derivative_m(1, 0.5), Err(Error::AtKnot { .. })));
    }

    #[test]
    fn dual_functionals_are_biorthogonal() {
        let w = WeightSystem::exponential(&[0.8, -0.6, 1.2], 0.0, 1.0).unwrap();
        let b = basis(3, vec![0.0, 0.15, 0.3, 0.7, 1.0], &w);
        for i in 0..b.dim() {
            let l = b.dual_functional(i).unwrap();
            for j in 0..b.dim() {
                let v = l.apply(&|x| b.n(j, x).unwrap());
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-8, "λ_{i} N_{j} = {v}");
            }
        }
    }

    #[test]
    fn hermite_recovers_alphas() {
        let w = WeightSystem::exponential(&[0.3, -0.2], 0.0, 1.0).unwrap();
        let b = basis(2, vec![0.0, 0.3, 0.6, 1.0], &w);
        let t = b.partition().knots().to_vec();
        let y: Vec<f64> = (0..b.dim()).map(|i| 0.5 * (t[i] + t[i + 2])).collect();
        let v: Vec<f64> = y.iter().map(|&x| w.weight(0).value(x)).collect();
        let c = b.hermite_interpolate(&y, &v).unwrap();
        for i in 0..b.dim() {
            assert!((c[i] - b.alpha(i)).abs() < 1e-10);
        }
        let mut bad = y.clone();
        bad[1] = 0.9;
        assert!(matches!(
            b.hermite_interpolate(&bad, &v),
            Err(Error::Interlacing { index: 1, .. })
        ));
    }
}
