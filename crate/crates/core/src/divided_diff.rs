//! Generalized divided differences with respect to an ECT system.
//!
//! `[t_1, ..., t_m] f` is the ratio of confluent determinants
//! `D(t; u_1, ..., u_{m-1}, f) / D(t; u_1, ..., u_m)`: the coefficient of
//! `u_m` in the interpolant of `f` from `span{u_1, ..., u_m}`.

use crate::ect::{BasisFn, DualSystem, EctSystem, RowMode, SignedDet, Smooth};
use crate::error::{Error, Result};

/// Knots below this fraction of the interval length are merged.
pub const SNAP_FRACTION: f64 = 1e-8;

/// Sorted knots with their confluence counts
/// `d_i = max{j : t_i = t_{i-1} = ... = t_{i-j}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotTuple {
    values: Vec<f64>,
    confluence: Vec<usize>,
}

impl KnotTuple {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be non-decreasing".into()));
        }
        let mut confluence = Vec::with_capacity(values.len());
        for (i, v) in values.iter().enumerate() {
            let d = if i > 0 && values[i - 1] == *v {
                confluence[i - 1] + 1
            } else {
                0
            };
            confluence.push(d);
        }
        Ok(Self { values, confluence })
    }

    /// Merges knots closer than `tol` to the first knot of their cluster.
    pub fn snapped(values: Vec<f64>, tol: f64) -> Result<Self> {
        let mut v = values;
        for i in 1..v.len() {
            let mut lead = i - 1;
            while lead > 0 && v[lead - 1] == v[lead] {
                lead -= 1;
            }
            if (v[i] - v[lead]).abs() < tol {
                v[i] = v[lead];
            }
        }
        Self::new(v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn confluence(&self) -> &[usize] {
        &self.confluence
    }

    pub fn check_multiplicity(&self, max: usize) -> Result<()> {
        for (v, d) in self.values.iter().zip(&self.confluence) {
            if d + 1 > max {
                return Err(Error::MultiplicityViolation {
                    value: *v,
                    multiplicity: d + 1,
                    max,
                });
            }
        }
        Ok(())
    }

    fn sub(&self, range: std::ops::Range<usize>) -> KnotTuple {
        KnotTuple::new(self.values[range].to_vec()).expect("sub-tuple of a valid tuple")
    }
}

/// Systems that divided differences can be taken with respect to.
pub trait Chebyshev {
    fn size(&self) -> usize;
    fn domain(&self) -> (f64, f64);
    fn basis(&self, i: usize) -> BasisFn<'_>;
    fn det(&self, knots: &KnotTuple, funcs: &[&dyn Smooth]) -> Result<SignedDet>;
}

impl Chebyshev for EctSystem {
    fn size(&self) -> usize {
        self.order()
    }
    fn domain(&self) -> (f64, f64) {
        self.interval()
    }
    fn basis(&self, i: usize) -> BasisFn<'_> {
        self.basis_fn(i)
    }
    fn det(&self, knots: &KnotTuple, funcs: &[&dyn Smooth]) -> Result<SignedDet> {
        self.determinant(knots, funcs, RowMode::Derivative)
    }
}

impl Chebyshev for DualSystem {
    fn size(&self) -> usize {
        self.len()
    }
    fn domain(&self) -> (f64, f64) {
        self.interval()
    }
    fn basis(&self, i: usize) -> BasisFn<'_> {
        self.basis_fn(i)
    }
    fn det(&self, knots: &KnotTuple, funcs: &[&dyn Smooth]) -> Result<SignedDet> {
        self.determinant(knots, funcs, RowMode::Derivative)
    }
}

/// `[t_1, ..., t_m] f` with respect to the first `m` functions of `sys`.
pub fn divided_difference(sys: &dyn Chebyshev, knots: &KnotTuple, f: &dyn Smooth) -> Result<f64> {
    let m = knots.len();
    if m == 0 || m > sys.size() {
        return Err(Error::Config(format!(
            "{m} knots for a system of {} functions",
            sys.size()
        )));
    }
    let (a, b) = sys.domain();
    let knots = KnotTuple::snapped(knots.values().to_vec(), SNAP_FRACTION * (b - a))?;
    let basis: Vec<BasisFn<'_>> = (0..m).map(|i| sys.basis(i)).collect();
    let mut funcs: Vec<&dyn Smooth> = basis.iter().map(|u| u as &dyn Smooth).collect();
    let den = sys.det(&knots, &funcs)?;
    if den.sign <= 0.0 {
        return Err(Error::Internal(format!(
            "collocation determinant of the system is not positive at {:?}",
            knots.values()
        )));
    }
    funcs[m - 1] = f;
    let num = sys.det(&knots, &funcs)?;
    Ok(num.sign * (num.log_abs - den.log_abs).exp())
}

/// Difference between `[t_1..t_k] f` and the two-term recursion through the
/// truncated system `(u_1, ..., u_{k-1})`.
pub fn dd_recursion_check(sys: &dyn Chebyshev, knots: &KnotTuple, f: &dyn Smooth) -> Result<f64> {
    let k = knots.len();
    if k < 2 {
        return Err(Error::Config("recursion needs at least two knots".into()));
    }
    let t = knots.values();
    if t[0] == t[k - 1] {
        return Err(Error::InvalidKnots(
            "recursion needs distinct first and last knots".into(),
        ));
    }
    let lhs = divided_difference(sys, knots, f)?;
    let right = knots.sub(1..k);
    let left = knots.sub(0..k - 1);
    let uk = sys.basis(k - 1);
    let num = divided_difference(sys, &right, f)? - divided_difference(sys, &left, f)?;
    let den = divided_difference(sys, &right, &uk)? - divided_difference(sys, &left, &uk)?;
    Ok(lhs - num / den)
}
