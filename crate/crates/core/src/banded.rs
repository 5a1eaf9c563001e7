//! Banded matrices: symmetric positive definite LDLᵀ and unpivoted LU.

use crate::error::{Error, Result};

/// Symmetric band matrix storing `(i, j)` for `i - bw <= j <= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bw).then(|| i * (self.bw + 1) + (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .expect("entry outside the band of a symmetric band matrix");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .expect("entry outside the band of a symmetric band matrix");
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn ldlt(&self) -> Result<Ldlt> {
        let (n, bw) = (self.n, self.bw);
        let mut l = SymBand::zeros(n, bw);
        let mut d = vec![0.0; n];
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut dj = self.get(j, j);
            for p in lo..j {
                let v = l.get(j, p);
                dj -= v * v * d[p];
            }
            if !(dj > 0.0) {
                return Err(Error::Singular(format!(
                    "pivot {j} is {dj:e}; matrix is not positive definite"
                )));
            }
            d[j] = dj;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut v = self.get(i, j);
                for p in lo_i..j {
                    v -= l.get(i, p) * l.get(j, p) * d[p];
                }
                l.set(i, j, v / dj);
            }
        }
        Ok(Ldlt { l, d })
    }
}

/// Factor `A = L D Lᵀ` with unit lower-triangular band `L`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    l: SymBand,
    d: Vec<f64>,
}

impl Ldlt {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.l.n, self.l.bw);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let s: f64 = (lo..i).map(|p| self.l.get(i, p) * x[p]).sum();
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let s: f64 = (i + 1..=hi).map(|p| self.l.get(p, i) * x[p]).sum();
            x[i] -= s;
        }
        x
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }
}

/// General band matrix with `lower` sub- and `upper` super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl Band {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        (j + self.lower >= i && j <= i + self.upper)
            .then(|| i * (self.lower + self.upper + 1) + (j + self.lower - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] = v;
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Gaussian elimination without pivoting, as is stable for totally
    /// positive matrices; the fill stays inside the band.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut a = self.clone();
        let mut x = rhs.to_vec();
        let n = self.n;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let piv = a.get(k, k);
            if !(piv.abs() > 1e-14 * scale) {
                return Err(Error::Singular(format!("zero pivot in row {k}")));
            }
            for i in k + 1..(k + self.lower + 1).min(n) {
                let f = a.get(i, k) / piv;
                if f == 0.0 {
                    continue;
                }
                for j in k..(k + self.upper + 1).min(n) {
                    let v = a.get(i, j) - f * a.get(k, j);
                    a.set(i, j, v);
                }
                x[i] -= f * x[k];
            }
        }
        for i in (0..n).rev() {
            let hi = (i + self.upper).min(n - 1);
            let s: f64 = (i + 1..=hi).map(|j| a.get(i, j) * x[j]).sum();
            x[i] = (x[i] - s) / a.get(i, i);
        }
        Ok(x)
    }
}
