//! Extended complete Chebyshev systems generated by a weight vector.
//!
//! With weights `w_0, ..., w_{k-1}` (counting from zero) the generalized
//! monomials are `u_i = w_0 ∫ w_1 ∫ ... ∫ w_i`, all integrals based at the
//! left end `a`. The operators are `D_i f = D(f / w_{i-1})` and
//! `L_j = D_j ... D_1`, so that `L_j u_i(a) = w_i(a) δ_{ij}`.

pub mod chains;
pub mod weights;

use nalgebra::DMatrix;

use crate::divided_diff::KnotTuple;
use crate::error::{Error, Result};
use crate::jet;
use chains::ChainTable;
pub use weights::{Preset, Weight, WeightBounds, WeightFn, WeightSystem};

/// Panels of the global tables; the build also checks against twice as many.
pub const GLOBAL_PANELS: usize = 64;

/// A function that can report its Taylor jet.
pub trait Smooth: Sync {
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>>;

    fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x, 0)?[0])
    }
}

impl<T: WeightFn + ?Sized> Smooth for T {
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        WeightFn::jet(self, x, order)
    }
}

/// A closure `(x, m) -> D^m f(x)` valid for `m <= max_order`.
pub struct Derivatives<F> {
    pub max_order: usize,
    pub f: F,
}

impl<F: Fn(f64, usize) -> f64 + Sync> Smooth for Derivatives<F> {
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        if order > self.max_order {
            return Err(Error::InsufficientSmoothness {
                what: "function".into(),
                requested: order,
                available: self.max_order,
            });
        }
        let d: Vec<f64> = (0..=order).map(|m| (self.f)(x, m)).collect();
        Ok(jet::from_derivatives(&d))
    }
}

/// Which operators fill the rows of a confluent determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowMode {
    /// Ordinary derivatives `D^d`.
    Derivative,
    /// The system's operators `L_d`.
    Operator,
}

/// A determinant as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedDet {
    pub sign: f64,
    pub log_abs: f64,
}

impl SignedDet {
    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }
}

/// The ECT system `u(w)` with its operators.
#[derive(Debug, Clone)]
pub struct EctSystem {
    weights: WeightSystem,
    table: ChainTable,
}

impl EctSystem {
    pub fn new(weights: WeightSystem) -> Result<Self> {
        let (a, b) = weights.interval();
        let table = ChainTable::uniform(weights.weights(), a, b, GLOBAL_PANELS)?;
        Ok(Self { weights, table })
    }

    pub fn order(&self) -> usize {
        self.weights.order()
    }

    pub fn weights(&self) -> &WeightSystem {
        &self.weights
    }

    pub fn interval(&self) -> (f64, f64) {
        self.weights.interval()
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.order() {
            return Err(Error::Config(format!(
                "basis index {i} out of range for order {}",
                self.order()
            )));
        }
        Ok(())
    }

    /// `u_i(x)`.
    pub fn value(&self, i: usize, x: f64) -> Result<f64> {
        self.check(i)?;
        let loc = self.table.locate(x)?;
        Ok(self.weights.weight(0).value(x) * self.table.chain_at(&loc, 1, i))
    }

    /// Taylor jet of `u_i` at `x`.
    pub fn jet(&self, i: usize, x: f64, order: usize) -> Result<Vec<f64>> {
        self.check(i)?;
        let w = WeightFn::jet(self.weights.weight(0).as_ref(), x, order)?;
        let c = self.table.chain_jet(1, i, x, order)?;
        Ok(jet::mul(&w, &c))
    }

    /// `L_j u_i(x) = w_j(x) ∫ w_{j+1} ... ∫ w_i` for `j <= i`, zero otherwise.
    pub fn l_of_basis(&self, j: usize, i: usize, x: f64) -> Result<f64> {
        self.check(i)?;
        if j > i {
            let _ = self.table.locate(x)?;
            return Ok(0.0);
        }
        let loc = self.table.locate(x)?;
        Ok(self.weights.weight(j).value(x) * self.table.chain_at(&loc, j + 1, i))
    }

    /// `(L_j f)(x)` from a jet of `f` of order `j`.
    pub fn apply_l(&self, j: usize, f: &dyn Smooth, x: f64) -> Result<f64> {
        if j > self.order() {
            return Err(Error::Config(format!(
                "operator L_{j} exceeds order {}",
                self.order()
            )));
        }
        let (a, b) = self.interval();
        if !(x >= a && x <= b) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        let mut g = f.jet(x, j)?;
        if g.len() < j + 1 {
            return Err(Error::InsufficientSmoothness {
                what: "function".into(),
                requested: j,
                available: g.len().saturating_sub(1),
            });
        }
        for i in 0..j {
            let w = WeightFn::jet(self.weights.weight(i).as_ref(), x, j - i)?;
            g = jet::deriv(&jet::div(&g, &w));
        }
        Ok(g[0])
    }

    /// `u_i` as a [`Smooth`] function.
    pub fn basis_fn(&self, i: usize) -> BasisFn<'_> {
        BasisFn { sys: self, i }
    }

    /// Green kernel `g_j(x, y)` for `j = 1..=k`; `truncated = false` gives `h_j`.
    pub fn green(&self, j: usize, x: f64, y: f64, truncated: bool) -> Result<f64> {
        if j == 0 || j > self.order() {
            return Err(Error::Config(format!(
                "kernel index {j} outside 1..={}",
                self.order()
            )));
        }
        let (a, b) = self.interval();
        for v in [x, y] {
            if !(v >= a && v <= b) {
                return Err(Error::OutOfDomain { x: v, a, b });
            }
        }
        if truncated && x < y {
            return Ok(0.0);
        }
        let w0 = self.weights.weight(0).value(x);
        if j == 1 {
            return Ok(w0);
        }
        if x == y {
            return Ok(0.0);
        }
        let panels = ((GLOBAL_PANELS as f64 * (x - y).abs() / (b - a)).ceil() as usize).max(1);
        let t = ChainTable::uniform(&self.weights.weights()[1..j], y, x, panels)?;
        Ok(w0 * t.chain_end(0, j - 2))
    }

    pub fn green_kernel(&self) -> GreenKernel<'_> {
        GreenKernel { sys: self }
    }

    /// Confluent collocation determinant of `funcs` at `knots`.
    pub fn determinant(
        &self,
        knots: &KnotTuple,
        funcs: &[&dyn Smooth],
        mode: RowMode,
    ) -> Result<SignedDet> {
        confluent_determinant(knots, funcs, self.order(), |d, f, x| match mode {
            RowMode::Derivative => derivative(f, d, x),
            RowMode::Operator => self.apply_l(d, f, x),
        })
    }
}

/// `u_i` of an [`EctSystem`].
pub struct BasisFn<'a> {
    sys: &'a EctSystem,
    i: usize,
}

impl Smooth for BasisFn<'_> {
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        self.sys.jet(self.i, x, order)
    }
}

/// The kernels `h_j` and their truncations `g_j = 1_{x ≥ y} h_j`.
pub struct GreenKernel<'a> {
    sys: &'a EctSystem,
}

impl GreenKernel<'_> {
    pub fn h(&self, j: usize, x: f64, y: f64) -> Result<f64> {
        self.sys.green(j, x, y, false)
    }

    pub fn g(&self, j: usize, x: f64, y: f64) -> Result<f64> {
        self.sys.green(j, x, y, true)
    }
}

/// The dual canonical system `u*(w)`: `k + 1` functions generated by the
/// weights `(1, w_{k-1}, ..., w_0)`, with `L*_d = D*_{k-d+1} ... D*_k`
/// where `D*_i f = Df / w_{i-1}`.
#[derive(Debug, Clone)]
pub struct DualSystem {
    inner: EctSystem,
}

impl DualSystem {
    pub fn new(weights: &WeightSystem) -> Result<Self> {
        Ok(Self {
            inner: EctSystem::new(weights.dual_weights())?,
        })
    }

    /// Number of dual functions, `k + 1`.
    pub fn len(&self) -> usize {
        self.inner.order()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interval(&self) -> (f64, f64) {
        self.inner.interval()
    }

    /// Weight vector `(1, w_{k-1}, ..., w_0)`.
    pub fn weights(&self) -> &WeightSystem {
        self.inner.weights()
    }

    /// `u*_i(x)`, `i = 0..=k`.
    pub fn value(&self, i: usize, x: f64) -> Result<f64> {
        self.inner.value(i, x)
    }

    pub fn jet(&self, i: usize, x: f64, order: usize) -> Result<Vec<f64>> {
        self.inner.jet(i, x, order)
    }

    /// `L*_d u*_i(x)`.
    pub fn l_of_basis(&self, d: usize, i: usize, x: f64) -> Result<f64> {
        if d > i {
            return self.inner.l_of_basis(d, i, x);
        }
        self.inner.check(i)?;
        self.inner.table.chain(d + 1, i, x)
    }

    /// `(L*_d f)(x)`.
    pub fn apply_l(&self, d: usize, f: &dyn Smooth, x: f64) -> Result<f64> {
        let v = self.inner.apply_l(d, f, x)?;
        Ok(v / self.inner.weights.weight(d.min(self.len() - 1)).value(x))
    }

    pub fn basis_fn(&self, i: usize) -> BasisFn<'_> {
        self.inner.basis_fn(i)
    }

    pub fn determinant(
        &self,
        knots: &KnotTuple,
        funcs: &[&dyn Smooth],
        mode: RowMode,
    ) -> Result<SignedDet> {
        confluent_determinant(knots, funcs, self.len(), |d, f, x| match mode {
            RowMode::Derivative => derivative(f, d, x),
            RowMode::Operator => self.apply_l(d, f, x),
        })
    }
}

fn derivative(f: &dyn Smooth, d: usize, x: f64) -> Result<f64> {
    let j = f.jet(x, d)?;
    let fact: f64 = (1..=d).map(|m| m as f64).product();
    Ok(j[d] * fact)
}

pub(crate) fn confluent_determinant<R>(
    knots: &KnotTuple,
    funcs: &[&dyn Smooth],
    max_multiplicity: usize,
    row: R,
) -> Result<SignedDet>
where
    R: Fn(usize, &dyn Smooth, f64) -> Result<f64>,
{
    let n = knots.len();
    if funcs.len() != n {
        return Err(Error::Config(format!(
            "{} knots but {} functions",
            n,
            funcs.len()
        )));
    }
    knots.check_multiplicity(max_multiplicity)?;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (r, (&t, &d)) in knots.values().iter().zip(knots.confluence()).enumerate() {
        for (c, f) in funcs.iter().enumerate() {
            m[(r, c)] = row(d, *f, t)?;
        }
    }
    Ok(signed_det(m))
}

/// Row-scaled LU determinant.
pub(crate) fn signed_det(mut m: DMatrix<f64>) -> SignedDet {
    let n = m.nrows();
    let mut log_scale = 0.0;
    for r in 0..n {
        let s = m.row(r).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if s == 0.0 {
            return SignedDet {
                sign: 0.0,
                log_abs: f64::NEG_INFINITY,
            };
        }
        m.row_mut(r).scale_mut(1.0 / s);
        log_scale += s.ln();
    }
    let lu = m.lu();
    let mut sign: f64 = lu.p().determinant();
    let mut log_abs = log_scale;
    for d in lu.u().diagonal().iter() {
        if *d == 0.0 {
            return SignedDet {
                sign: 0.0,
                log_abs: f64::NEG_INFINITY,
            };
        }
        sign *= d.signum();
        log_abs += d.abs().ln();
    }
    SignedDet { sign, log_abs }
}
