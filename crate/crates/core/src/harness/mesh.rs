//! Mesh families for the experiments.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MeshFamily {
    Uniform,
    /// Interior breakpoints drawn uniformly at random.
    RandomUniform,
    /// Interval lengths proportional to `ratio^i`.
    Geometric { ratio: f64 },
    /// Breakpoints `a + (b - a) (i/n)^power`.
    Graded { power: f64 },
    /// Interval lengths alternating between `big` and `small`.
    TwoScale { big: f64, small: f64 },
}

impl MeshFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MeshFamily::Uniform | MeshFamily::RandomUniform => true,
            MeshFamily::Geometric { ratio } => ratio > 0.0 && ratio.is_finite(),
            MeshFamily::Graded { power } => power >= 1.0 && power.is_finite(),
            MeshFamily::TwoScale { big, small } => {
                big > 0.0 && small > 0.0 && big.is_finite() && small.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid mesh family parameters: {self}")))
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshFamily::Uniform => write!(f, "uniform"),
            MeshFamily::RandomUniform => write!(f, "random-uniform"),
            MeshFamily::Geometric { ratio } => write!(f, "geometric({ratio})"),
            MeshFamily::Graded { power } => write!(f, "graded({power})"),
            MeshFamily::TwoScale { big, small } => write!(f, "two-scale({big},{small})"),
        }
    }
}

/// A reproducible mesh: `n` grid intervals of `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub family: MeshFamily,
    pub n: usize,
    pub seed: u64,
    pub a: f64,
    pub b: f64,
}

/// Breakpoints of the mesh.
pub fn mesh_breakpoints(spec: &MeshSpec) -> Result<Vec<f64>> {
    spec.family.validate()?;
    let MeshSpec { n, a, b, .. } = *spec;
    if n < 2 {
        return Err(Error::Config(format!("a mesh needs at least 2 intervals, got {n}")));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    let from_lengths = |len: Vec<f64>| {
        let total: f64 = len.iter().sum();
        let mut acc = 0.0;
        let mut x = vec![a];
        for l in &len[..len.len() - 1] {
            acc += l;
            x.push(a + (b - a) * acc / total);
        }
        x.push(b);
        x
    };
    let breaks = match spec.family {
        MeshFamily::Uniform => (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect(),
        MeshFamily::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            loop {
                let mut x: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(a..b)).collect();
                x.push(a);
                x.push(b);
                x.sort_by(f64::total_cmp);
                if x.windows(2).all(|w| w[0] < w[1]) {
                    break x;
                }
            }
        }
        MeshFamily::Geometric { ratio } => from_lengths((0..n).map(|i| ratio.powi(i as i32)).collect()),
        MeshFamily::Graded { power } => (0..=n)
            .map(|i| a + (b - a) * (i as f64 / n as f64).powf(power))
            .collect(),
        MeshFamily::TwoScale { big, small } => {
            from_lengths((0..n).map(|i| if i % 2 == 0 { big } else { small }).collect())
        }
    };
    if !breaks.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidKnots(format!(
            "{} with n = {n} does not give increasing breakpoints in floating point",
            spec.family
        )));
    }
    Ok(breaks)
}

pub fn generate_mesh(spec: &MeshSpec, k: usize) -> Result<Partition> {
    Partition::new(mesh_breakpoints(spec)?, k)
}

/// Lengths within this relative distance count as equal, so that rounding in
/// the midpoints does not change which interval is split.
const TIE: f64 = 1e-12;

/// Index of the largest length, the leftmost among (nearly) equal ones.
fn largest(len: &[f64]) -> usize {
    let max = len.iter().copied().fold(0.0, f64::max);
    len.iter().position(|&l| l >= max * (1.0 - TIE)).unwrap_or(0)
}

/// Inserts the midpoint of the largest interval (the leftmost among equals).
pub fn refine_largest(p: &Partition) -> Result<(Partition, usize)> {
    let br = p.breakpoints();
    let len: Vec<f64> = br.windows(2).map(|w| w[1] - w[0]).collect();
    let best = largest(&len);
    Ok((p.insert(0.5 * (br[best] + br[best + 1]))?, best))
}

/// Refines until `|Δ| <= eps`, returning the partition and the interval split at each step.
pub fn refine_to(p: &Partition, eps: f64) -> Result<(Partition, Vec<usize>)> {
    let mut cur = p.clone();
    let mut steps = Vec::new();
    while cur.mesh() > eps {
        let (next, m) = refine_largest(&cur)?;
        cur = next;
        steps.push(m);
    }
    Ok((cur, steps))
}

/// The same schedule computed on interval lengths only.
pub fn simulate_schedule(lengths: &[f64], eps: f64) -> Vec<usize> {
    let mut len = lengths.to_vec();
    let mut steps = Vec::new();
    loop {
        let best = largest(&len);
        let max = len[best];
        if len.iter().all(|&l| l <= eps) {
            return steps;
        }
        len[best] = 0.5 * max;
        len.insert(best + 1, 0.5 * max);
        steps.push(best);
    }
}
