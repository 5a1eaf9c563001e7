//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use chebspline::harness::{generate_mesh, MeshFamily, MeshSpec};
use chebspline::{BSplineBasis, Partition, WeightSystem};
use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};

pub const PRESETS: [&str; 3] = ["constant", "exponential", "polynomial"];

pub fn weights(name: &str, k: usize) -> WeightSystem {
    WeightSystem::preset(name, k, 0.0, 1.0).unwrap()
}

pub fn random_mesh(n: usize, seed: u64, k: usize) -> Partition {
    mesh(MeshFamily::RandomUniform, n, seed, k)
}

pub fn mesh(family: MeshFamily, n: usize, seed: u64, k: usize) -> Partition {
    let spec = MeshSpec {
        family,
        n,
        seed,
        a: 0.0,
        b: 1.0,
    };
    generate_mesh(&spec, k).unwrap()
}

/// Gauss–Legendre rule mapped to `[lo, hi]`.
pub fn gauss(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(n.try_into().unwrap());
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    rule.as_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Classical polynomial B-splines by the Cox–de Boor recursion, scaled to unit integral.
pub struct CoxDeBoor {
    pub k: usize,
    pub knots: Vec<f64>,
    pub breaks: Vec<f64>,
}

impl CoxDeBoor {
    pub fn new(breaks: &[f64], k: usize) -> Self {
        let (a, b) = (breaks[0], *breaks.last().unwrap());
        let mut knots = vec![a; k - 1];
        knots.extend_from_slice(breaks);
        knots.extend(std::iter::repeat(b).take(k - 1));
        Self {
            k,
            knots,
            breaks: breaks.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.breaks.len() + self.k - 2
    }

    /// All `M_i(x)`, evaluated from grid interval `m` (so breakpoints take one-sided values).
    pub fn values_on(&self, m: usize, x: f64) -> Vec<f64> {
        let k = self.k;
        let t = &self.knots;
        // Knot span `[t_s, t_{s+1})` with s = m + k - 1.
        let s = m + k - 1;
        // b[q] = B_{s-r+1+q, r}; raising the order splits each term between
        // two neighbours.
        let mut b = vec![1.0];
        for r in 1..k {
            let mut nb = vec![0.0; r + 1];
            for q in 0..r {
                let i = s + 1 + q - r;
                let d = t[i + r] - t[i];
                let w = if d > 0.0 { b[q] / d } else { 0.0 };
                nb[q] += (t[i + r] - x) * w;
                nb[q + 1] += (x - t[i]) * w;
            }
            b = nb;
        }
        let mut out = vec![0.0; self.dim()];
        for q in 0..k {
            let i = s + 1 + q - k;
            out[i] = b[q] * k as f64 / (t[i + k] - t[i]);
        }
        out
    }

    pub fn locate(&self, x: f64) -> usize {
        let n = self.breaks.len() - 1;
        (0..n).rfind(|&m| self.breaks[m] <= x).unwrap_or(0).min(n - 1)
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        self.values_on(self.locate(x), x)
    }
}

/// Dense projector built from arbitrary basis evaluators: composite Gauss Gram,
/// nalgebra inverse.
pub struct DenseProjector {
    pub breaks: Vec<f64>,
    pub gram: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    eval: Box<dyn Fn(usize, f64) -> Vec<f64>>,
    pub panels: usize,
    pub points: usize,
}

impl DenseProjector {
    /// `eval(m, x)` returns all basis values from grid interval `m`.
    pub fn new(breaks: &[f64], dim: usize, panels: usize, points: usize, eval: Box<dyn Fn(usize, f64) -> Vec<f64>>) -> Self {
        let mut gram = DMatrix::zeros(dim, dim);
        for m in 0..breaks.len() - 1 {
            for (x, w) in composite(breaks[m], breaks[m + 1], panels, points) {
                let v = eval(m, x);
                for i in 0..dim {
                    if v[i] == 0.0 {
                        continue;
                    }
                    for j in 0..dim {
                        gram[(i, j)] += w * v[i] * v[j];
                    }
                }
            }
        }
        let inverse = gram.clone().try_inverse().expect("Gram matrix invertible");
        Self {
            breaks: breaks.to_vec(),
            gram,
            inverse,
            eval,
            panels,
            points,
        }
    }

    pub fn classical(breaks: &[f64], k: usize) -> Self {
        let cb = CoxDeBoor::new(breaks, k);
        let dim = cb.dim();
        Self::new(breaks, dim, 1, k + 2, Box::new(move |m, x| cb.values_on(m, x)))
    }

    pub fn from_basis(basis: &BSplineBasis) -> Self {
        let b = basis.clone();
        let part = basis.partition().clone();
        let eval = move |m: usize, x: f64| {
            let (lo, hi) = part.grid_interval(m);
            // Stay inside interval m so the right one-sided values are used.
            let x = x.clamp(lo + 1e-15 * (hi - lo), hi - 1e-15 * (hi - lo));
            (0..b.dim()).map(|i| b.m(i, x).unwrap()).collect()
        };
        Self::new(basis.partition().breakpoints(), basis.dim(), 4, 12, Box::new(eval))
    }

    pub fn values(&self, m: usize, x: f64) -> Vec<f64> {
        (self.eval)(m, x)
    }

    pub fn project(&self, f: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let dim = self.gram.nrows();
        let mut rhs = DVector::zeros(dim);
        for m in 0..self.breaks.len() - 1 {
            for (x, w) in composite(self.breaks[m], self.breaks[m + 1], 8, 16) {
                let v = self.values(m, x);
                let fx = f(x);
                for i in 0..dim {
                    rhs[i] += w * fx * v[i];
                }
            }
        }
        (&self.inverse * rhs).iter().copied().collect()
    }

    /// `t ↦ K(τ, t)` coefficients with `τ` evaluated from interval `m`.
    pub fn kernel(&self, m: usize, tau: f64) -> Vec<f64> {
        let v = DVector::from_vec(self.values(m, tau));
        (&self.inverse * v).iter().copied().collect()
    }

    fn spline(&self, c: &[f64], m: usize, x: f64) -> f64 {
        self.values(m, x).iter().zip(c).map(|(a, b)| a * b).sum()
    }

    /// `∫|Σ c_i M_i|`: sign changes located on a dense scan and bisected.
    pub fn l1(&self, c: &[f64]) -> f64 {
        let mut total = 0.0;
        for m in 0..self.breaks.len() - 1 {
            let (lo, hi) = (self.breaks[m], self.breaks[m + 1]);
            let f = |x: f64| self.spline(c, m, x);
            let mut cuts = vec![lo];
            let scan = 64;
            let mut px = lo;
            let mut pv = f(lo);
            for s in 1..=scan {
                let x = lo + (hi - lo) * s as f64 / scan as f64;
                let v = f(x);
                if pv * v < 0.0 {
                    let (mut a, mut b) = (px, x);
                    for _ in 0..60 {
                        let mid = 0.5 * (a + b);
                        if f(mid) * pv > 0.0 {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    cuts.push(0.5 * (a + b));
                }
                px = x;
                pv = v;
            }
            cuts.push(hi);
            for w in cuts.windows(2) {
                let s: f64 = gauss(w[0], w[1], 12).into_iter().map(|(x, wt)| wt * f(x)).sum();
                total += s.abs();
            }
        }
        total
    }

    pub fn lebesgue(&self, m: usize, tau: f64) -> f64 {
        self.l1(&self.kernel(m, tau))
    }

    /// `P f(τ)` maximized over piecewise-constant `f = ±1` on `cells` cells per
    /// interval: the sign of each cell is chosen by the sign of `∫_cell K(τ,·)`.
    pub fn sign_pattern_lebesgue(&self, m: usize, tau: f64, cells: usize) -> f64 {
        let c = self.kernel(m, tau);
        let mut total = 0.0;
        for q in 0..self.breaks.len() - 1 {
            let (lo, hi) = (self.breaks[q], self.breaks[q + 1]);
            for s in 0..cells {
                let a = lo + (hi - lo) * s as f64 / cells as f64;
                let b = lo + (hi - lo) * (s + 1) as f64 / cells as f64;
                let v: f64 = gauss(a, b, 8).into_iter().map(|(x, w)| w * self.spline(&c, q, x)).sum();
                total += v.abs();
            }
        }
        total
    }
}

pub fn composite(lo: f64, hi: f64, panels: usize, points: usize) -> Vec<(f64, f64)> {
    (0..panels)
        .flat_map(|p| {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
            gauss(a, b, points)
        })
        .collect()
}

/// Classical divided difference `[x_0, ..., x_m] f` from a Newton table; repeated
/// nodes use `derivs(x, j) = f^{(j)}(x)`.
pub fn newton_dd(nodes: &[f64], derivs: &dyn Fn(f64, usize) -> f64) -> f64 {
    let mut x = nodes.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let mut table: Vec<f64> = x.iter().map(|&t| derivs(t, 0)).collect();
    let mut fact = 1.0;
    for level in 1..n {
        fact *= level as f64;
        for i in (level..n).rev() {
            let d = x[i] - x[i - level];
            table[i] = if d == 0.0 {
                derivs(x[i], level) / fact
            } else {
                (table[i] - table[i - 1]) / d
            };
        }
    }
    table[n - 1]
}

/// Sum of terms `c x^p e^{λ x}`.
#[derive(Debug, Clone, Default)]
pub struct ExpPoly(pub Vec<(f64, u32, f64)>);

impl ExpPoly {
    pub fn exp(rate: f64) -> Self {
        ExpPoly(vec![(1.0, 0, rate)])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().map(|&(c, p, l)| c * x.powi(p as i32) * (l * x).exp()).sum()
    }

    pub fn times_exp(&self, rate: f64) -> Self {
        ExpPoly(self.0.iter().map(|&(c, p, l)| (c, p, l + rate)).collect())
    }

    fn antiderivative(&self) -> Self {
        let mut out = Vec::new();
        for &(c, p, l) in &self.0 {
            if l.abs() < 1e-12 {
                out.push((c / (p + 1) as f64, p + 1, 0.0));
            } else {
                // ∫ t^p e^{lt} = e^{lt} Σ_j (-1)^j p!/(p-j)! t^{p-j} / l^{j+1}.
                let mut coef = c / l;
                for j in 0..=p {
                    out.push((coef, p - j, l));
                    coef *= -((p - j) as f64) / l;
                }
            }
        }
        ExpPoly(out)
    }

    /// `x ↦ ∫_a^x self`.
    pub fn integral_from(&self, a: f64) -> Self {
        let mut f = self.antiderivative();
        let at_a = f.eval(a);
        f.0.push((-at_a, 0, 0.0));
        f
    }
}

/// `u_i = w_0 ∫_a w_1 ∫_a ... ∫_a w_i` for exponential weights, in closed form.
pub fn exponential_monomial(rates: &[f64], i: usize, a: f64) -> ExpPoly {
    let mut f = ExpPoly::exp(rates[i]);
    for j in (0..i).rev() {
        f = f.integral_from(a).times_exp(rates[j]);
    }
    f
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `max |a - b| / max |b|`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_abs(b).max(f64::MIN_POSITIVE)
}
