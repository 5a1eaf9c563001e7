//! The functions `φ_{i,r}` of the dual system and the dual functionals.

use nalgebra::{DMatrix, DVector};

use crate::divided_diff::KnotTuple;
use crate::ect::chains::ChainTable;
use crate::ect::weights::Polynomial;
use crate::ect::{Weight, WeightFn};
use crate::error::{Error, Result};
use crate::jet;
use crate::partition::Partition;
use crate::quad;

/// The element of `span{u*_0, ..., u*_{r-1}}` with leading coefficient one
/// vanishing at the given zeros (with multiplicity). It is stored in the
/// dual basis re-based at `base`, which spans the same space with the same
/// leading coefficient.
#[derive(Debug, Clone)]
pub struct LocalPhi {
    base: f64,
    right: Option<ChainTable>,
    left: Option<ChainTable>,
    coeffs: Vec<f64>,
}

impl LocalPhi {
    /// `dual` are the weights `(1, w_{k-1}, ..., w_0)`; the tables cover `[x0, x1] ∋ base`.
    pub fn new(
        dual: &[Weight],
        partition: &Partition,
        base: f64,
        x0: f64,
        x1: f64,
        zeros: &[f64],
    ) -> Result<Self> {
        let r = zeros.len() + 1;
        if r > dual.len() {
            return Err(Error::Config(format!(
                "φ with {} zeros needs {} dual functions, only {} exist",
                zeros.len(),
                r,
                dual.len()
            )));
        }
        let w = &dual[..r];
        let right = if x1 > base {
            Some(ChainTable::build(w, partition.panel_breaks(base, x1))?)
        } else {
            None
        };
        let left = if x0 < base {
            let mut br = partition.panel_breaks(x0, base);
            br.reverse();
            Some(ChainTable::build(w, br)?)
        } else {
            None
        };
        let mut phi = Self {
            base,
            right,
            left,
            coeffs: vec![0.0; r],
        };
        phi.coeffs[r - 1] = 1.0;
        if r == 1 {
            return Ok(phi);
        }
        let z = KnotTuple::new(zeros.to_vec())?;
        z.check_multiplicity(r - 1)?;
        let n = r - 1;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for (row, (&t, &d)) in z.values().iter().zip(z.confluence()).enumerate() {
            for col in 0..n {
                a[(row, col)] = phi.l_star_basis(d, col, t)?;
            }
            rhs[row] = -phi.l_star_basis(d, n, t)?;
        }
        let mut scale = vec![1.0; n];
        for col in 0..n {
            let s = a.column(col).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if s > 0.0 {
                scale[col] = s;
                a.column_mut(col).scale_mut(1.0 / s);
            }
        }
        let sol = a.lu().solve(&rhs).ok_or_else(|| {
            Error::DegenerateKnots(format!("zeros {zeros:?} do not determine φ"))
        })?;
        for col in 0..n {
            phi.coeffs[col] = sol[col] / scale[col];
        }
        Ok(phi)
    }

    fn table(&self, s: f64) -> Result<&ChainTable> {
        let side = if s >= self.base {
            self.right.as_ref().or(self.left.as_ref().filter(|_| s == self.base))
        } else {
            self.left.as_ref()
        };
        side.ok_or(Error::OutOfDomain {
            x: s,
            a: self.base,
            b: self.base,
        })
    }

    /// `L*_d` of the re-based dual function `j` at `s`.
    fn l_star_basis(&self, d: usize, j: usize, s: f64) -> Result<f64> {
        if d > j {
            return Ok(0.0);
        }
        self.table(s)?.chain(d + 1, j, s)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        self.l_star(0, s)
    }

    /// `L*_d φ(s)`.
    pub fn l_star(&self, d: usize, s: f64) -> Result<f64> {
        let t = self.table(s)?;
        let loc = t.locate(s)?;
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j >= d)
            .map(|(j, c)| c * t.chain_at(&loc, d + 1, j))
            .sum())
    }

    pub fn jet(&self, s: f64, order: usize) -> Result<Vec<f64>> {
        let t = self.table(s)?;
        let loc = t.locate(s)?;
        let mut out = vec![0.0; order + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            let e = t.chain_jet_at(&loc, 1, j, s, order)?;
            for (o, v) in out.iter_mut().zip(e) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

/// Smooth step `g` with `g = 0` on `(-∞, 0]` and `g = 1` on `[1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cutoff {
    /// Polynomial of degree `2k + 1`, `C^k` at both ends.
    #[default]
    Smoothstep,
    /// `e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)})`, infinitely smooth.
    Exponential,
}

impl Cutoff {
    /// Jet of `g` at `s` for an operator order `k`.
    pub fn jet(&self, k: usize, s: f64, order: usize) -> Result<Vec<f64>> {
        if s <= 0.0 {
            return Ok(vec![0.0; order + 1]);
        }
        if s >= 1.0 {
            return Ok(jet::constant(1.0, order));
        }
        match self {
            Cutoff::Smoothstep => smoothstep(k).jet(s, order),
            Cutoff::Exponential => {
                let mut lin = vec![0.0; order + 1];
                lin[0] = s;
                if order > 0 {
                    lin[1] = 1.0;
                }
                let mut rev = vec![0.0; order + 1];
                rev[0] = 1.0 - s;
                if order > 0 {
                    rev[1] = -1.0;
                }
                let minus_one = jet::constant(-1.0, order);
                let f = jet::exp(&jet::div(&minus_one, &lin));
                let g = jet::exp(&jet::div(&minus_one, &rev));
                let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
                Ok(jet::div(&f, &sum))
            }
        }
    }
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `s^{k+1} Σ_j C(k+j, j) C(2k+1, k-j) (-s)^j`.
fn smoothstep(k: usize) -> Polynomial {
    let mut coeffs = vec![0.0; 2 * k + 2];
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[k + 1 + j] = sign * binomial(k + j, j) * binomial(2 * k + 1, k - j);
    }
    Polynomial { coeffs }
}

/// Quadrature form of `λ_i f = ∫_{J_i} f L*_k(φ_{i+1,k} G_i)`.
#[derive(Debug, Clone)]
pub struct DualFunctional {
    pub index: usize,
    /// Grid interval `J_i`.
    pub interval: usize,
    nodes: Vec<(f64, f64)>,
}

/// Gauss points per tabulation panel of `J_i`.
const DUAL_GAUSS: usize = 32;

impl DualFunctional {
    pub(crate) fn build(
        index: usize,
        interval: usize,
        phi: &LocalPhi,
        dual: &[Weight],
        partition: &Partition,
        cutoff: Cutoff,
    ) -> Result<Self> {
        let k = dual.len() - 1;
        let (lo, hi) = partition.grid_interval(interval);
        let len = hi - lo;
        let br = partition.panel_breaks(lo, hi);
        let mut nodes = Vec::new();
        for w in br.windows(2) {
            for (x, wt) in quad::mapped_rule(w[0], w[1], DUAL_GAUSS) {
                let pj = phi.jet(x, k)?;
                let gs = cutoff.jet(k, (x - lo) / len, k)?;
                let g: Vec<f64> = gs
                    .iter()
                    .enumerate()
                    .map(|(m, v)| v / len.powi(m as i32))
                    .collect();
                let mut f = jet::mul(&pj, &g);
                for (d, wd) in dual.iter().enumerate().take(k) {
                    let wj = WeightFn::jet(wd.as_ref(), x, k - d)?;
                    f = jet::deriv(&jet::div(&f, &wj));
                }
                let kernel = f[0] / dual[k].value(x);
                nodes.push((x, wt * kernel));
            }
        }
        Ok(Self {
            index,
            interval,
            nodes,
        })
    }

    pub fn apply(&self, f: &dyn Fn(f64) -> f64) -> f64 {
        self.nodes.iter().map(|(x, w)| w * f(*x)).sum()
    }

    /// `∫ |L*_k(φ G)|`, the constant in `|λ_i f| ≤ C ‖f‖_{L∞(J_i)}`.
    pub fn l1_kernel(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w.abs()).sum()
    }
}
