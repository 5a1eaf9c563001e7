//! Breakpoints and extended knot vectors.

use crate::error::{Error, Result};

/// Sub-panels used for tabulation are at most this fraction of `b - a`.
pub const PANEL_FRACTION: f64 = 1.0 / 64.0;

/// Breakpoints `a = τ_0 < ... < τ_m = b` with an order `k`. The extended
/// knots repeat `a` and `b` `k` times: `t_0 = ... = t_{k-1} = a`,
/// `t_{k-1+j} = τ_j`, `t_{n+1} = ... = t_{n+k} = b` with `n = m + k - 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    breaks: Vec<f64>,
    k: usize,
    knots: Vec<f64>,
}

impl Partition {
    pub fn new(breaks: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("order must be at least 1".into()));
        }
        if breaks.len() < 2 {
            return Err(Error::InvalidKnots("need at least two breakpoints".into()));
        }
        if breaks.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKnots("non-finite breakpoint".into()));
        }
        for (i, w) in breaks.windows(2).enumerate() {
            if w[1] == w[0] {
                // Interior knots are simple.
                return Err(Error::MultiplicityViolation {
                    value: w[1],
                    multiplicity: 2,
                    max: 1,
                });
            }
            if w[1] < w[0] {
                return Err(Error::InvalidKnots(format!(
                    "breakpoints not increasing at index {}",
                    i + 1
                )));
            }
        }
        let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
        let mut knots = vec![a; k - 1];
        knots.extend_from_slice(&breaks);
        knots.extend(std::iter::repeat(b).take(k - 1));
        Ok(Self { breaks, k, knots })
    }

    pub fn uniform(a: f64, b: f64, intervals: usize, k: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        if intervals == 0 {
            return Err(Error::InvalidKnots("need at least one interval".into()));
        }
        let breaks = (0..=intervals)
            .map(|i| {
                if i == intervals {
                    b
                } else {
                    a + (b - a) * i as f64 / intervals as f64
                }
            })
            .collect();
        Self::new(breaks, k)
    }

    /// Same breakpoints, different order.
    pub fn with_order(&self, k: usize) -> Result<Self> {
        Self::new(self.breaks.clone(), k)
    }

    /// Adds one breakpoint.
    pub fn insert(&self, x: f64) -> Result<Self> {
        let (a, b) = self.interval();
        if !(x > a && x < b) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        let pos = self.breaks.partition_point(|&v| v < x);
        if self.breaks[pos] == x {
            return Err(Error::MultiplicityViolation {
                value: x,
                multiplicity: 2,
                max: 1,
            });
        }
        let mut breaks = self.breaks.clone();
        breaks.insert(pos, x);
        Self::new(breaks, self.k)
    }

    /// Breakpoints `a + b - τ_j` in increasing order.
    pub fn reflected(&self) -> Self {
        let (a, b) = self.interval();
        let mut breaks: Vec<f64> = self.breaks.iter().rev().map(|t| a + b - t).collect();
        breaks[0] = a;
        let last = breaks.len() - 1;
        breaks[last] = b;
        Self::new(breaks, self.k).expect("reflection keeps a valid partition")
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// Extended knots `t_0, ..., t_{n+k}`.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of grid intervals `m`.
    pub fn intervals(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Largest B-spline index `n = m + k - 2`.
    pub fn n(&self) -> usize {
        self.intervals() + self.k - 2
    }

    /// Dimension `n + 1` of the spline space.
    pub fn dim(&self) -> usize {
        self.intervals() + self.k - 1
    }

    /// Mesh size `|Δ|`.
    pub fn mesh(&self) -> f64 {
        self.breaks
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn grid_interval(&self, m: usize) -> (f64, f64) {
        (self.breaks[m], self.breaks[m + 1])
    }

    /// Interval containing `x`, right-open except the last one.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let (a, b) = self.interval();
        if !(x >= a && x <= b) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        let m = self.breaks.partition_point(|&v| v <= x);
        Ok(m.saturating_sub(1).min(self.intervals() - 1))
    }

    /// Whether `x` is a breakpoint.
    pub fn is_breakpoint(&self, x: f64) -> bool {
        let p = self.breaks.partition_point(|&v| v < x);
        p < self.breaks.len() && self.breaks[p] == x
    }

    /// Support `[t_i, t_{i+k}]` of the `i`-th B-spline.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.k])
    }

    /// Grid intervals inside the support of the `i`-th B-spline.
    pub fn support_intervals(&self, i: usize) -> std::ops::Range<usize> {
        let lo = (i + 1).saturating_sub(self.k);
        let hi = (i + 1).min(self.intervals());
        lo..hi
    }

    /// Largest grid interval inside the support, leftmost on ties.
    pub fn largest_in_support(&self, i: usize) -> usize {
        let mut best = usize::MAX;
        let mut len = -1.0;
        for m in self.support_intervals(i) {
            let (lo, hi) = self.grid_interval(m);
            if hi - lo > len {
                len = hi - lo;
                best = m;
            }
        }
        best
    }

    /// Breakpoints between `x0 < x1` (both included), each gap split into
    /// equal pieces no longer than [`PANEL_FRACTION`] of the interval.
    pub fn panel_breaks(&self, x0: f64, x1: f64) -> Vec<f64> {
        let (a, b) = self.interval();
        let max_len = PANEL_FRACTION * (b - a);
        let mut pts = vec![x0];
        pts.extend(self.breaks.iter().copied().filter(|&t| t > x0 && t < x1));
        pts.push(x1);
        let mut out = vec![x0];
        for w in pts.windows(2) {
            let pieces = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
            for s in 1..pieces {
                out.push(w[0] + (w[1] - w[0]) * s as f64 / pieces as f64);
            }
            out.push(w[1]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_knots_and_counts() {
        let p = Partition::new(vec![0.0, 0.3, 0.5, 1.0], 3).unwrap();
        assert_eq!(p.knots(), &[0.0, 0.0, 0.0, 0.3, 0.5, 1.0, 1.0, 1.0]);
        assert_eq!(p.n(), 4);
        assert_eq!(p.knots().len(), p.n() + p.order() + 1);
        assert_eq!(p.dim(), 5);
        assert!((p.mesh() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn support_bookkeeping() {
        let p = Partition::uniform(0.0, 1.0, 4, 3).unwrap();
        assert_eq!(p.support_intervals(0), 0..1);
        assert_eq!(p.support_intervals(2), 0..3);
        assert_eq!(p.support_intervals(5), 3..4);
        for i in 0..=p.n() {
            let (lo, hi) = p.support(i);
            let r = p.support_intervals(i);
            assert_eq!(p.grid_interval(r.start).0, lo);
            assert_eq!(p.grid_interval(r.end - 1).1, hi);
        }
    }

    #[test]
    fn locate_is_right_open() {
        let p = Partition::uniform(0.0, 1.0, 4, 2).unwrap();
        assert_eq!(p.locate(0.25).unwrap(), 1);
        assert_eq!(p.locate(1.0).unwrap(), 3);
        assert_eq!(p.locate(0.0).unwrap(), 0);
        assert!(p.locate(1.1).is_err());
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(Partition::new(vec![0.0, 0.5, 0.5, 1.0], 2).is_err());
        assert!(Partition::new(vec![0.0, 0.6, 0.5, 1.0], 2).is_err());
        assert!(Partition::new(vec![0.0], 2).is_err());
    }

    #[test]
    fn largest_interval_prefers_left() {
        let p = Partition::new(vec![0.0, 0.2, 0.4, 0.6, 1.0], 2).unwrap();
        assert_eq!(p.largest_in_support(1), 0);
        assert_eq!(p.largest_in_support(4), 3);
    }

    #[test]
    fn reflection_and_insertion() {
        let p = Partition::new(vec![0.0, 0.1, 0.4, 1.0], 2).unwrap();
        let r = p.reflected();
        assert!((r.breakpoints()[1] - 0.6).abs() < 1e-15);
        assert!((r.breakpoints()[2] - 0.9).abs() < 1e-15);
        let q = p.insert(0.7).unwrap();
        assert_eq!(q.breakpoints(), &[0.0, 0.1, 0.4, 0.7, 1.0]);
        assert!(p.insert(0.4).is_err());
    }

    #[test]
    fn panel_breaks_split_long_gaps() {
        let p = Partition::new(vec![0.0, 0.01, 1.0], 2).unwrap();
        let b = p.panel_breaks(0.0, 0.05);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[1], 0.01);
        assert_eq!(*b.last().unwrap(), 0.05);
        assert!(b.windows(2).all(|w| w[1] - w[0] <= 1.0 / 64.0 + 1e-15));
    }
}
