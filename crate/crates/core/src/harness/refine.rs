//! Knot-insertion experiment: split the largest interval until `|Δ| <= ε`
//! and follow `‖P̃f - Pf‖∞` across the insertions.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::mesh::{generate_mesh, refine_largest, simulate_schedule, MeshSpec};
use super::report::{fmt_f64, output_path, write_csv, write_json};
use crate::bspline::BSplineBasis;
use crate::ect::WeightSystem;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::projection::{NormOptions, ProjectionOperator};

pub type Probe = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `±1` on the intervals of `p`: the alternating pattern and each single interval.
pub fn sign_probes(p: &Partition) -> Vec<Probe> {
    let br: Arc<Vec<f64>> = Arc::new(p.breakpoints().to_vec());
    let locate = |br: &[f64], x: f64| br.partition_point(|&t| t <= x).clamp(1, br.len() - 1) - 1;
    let mut out: Vec<Probe> = Vec::new();
    let b = br.clone();
    out.push(Arc::new(move |x| if locate(&b, x) % 2 == 0 { 1.0 } else { -1.0 }));
    for m in 0..br.len() - 1 {
        let b = br.clone();
        out.push(Arc::new(move |x| if locate(&b, x) == m { 1.0 } else { -1.0 }));
    }
    out
}

/// Sums of five sinusoids scaled to `max |f| = 1` on a fine grid.
pub fn smooth_probes(count: usize, seed: u64, a: f64, b: f64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let terms: Vec<(f64, f64, f64)> = (0..5)
                .map(|_| {
                    (
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(1.0..12.0) * 2.0 * PI / (b - a),
                        rng.gen_range(0.0..2.0 * PI),
                    )
                })
                .collect();
            let raw = move |x: f64| -> f64 {
                terms.iter().map(|(c, w, p)| c * (w * (x - a) + p).sin()).sum()
            };
            let max = (0..=4000)
                .map(|i| raw(a + (b - a) * i as f64 / 4000.0).abs())
                .fold(0.0, f64::max);
            Arc::new(move |x| raw(x) / max) as Probe
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineStep {
    pub k: usize,
    pub weight: String,
    pub step: usize,
    /// Index and length of the interval that was split.
    pub split: usize,
    pub split_length: f64,
    pub intervals: usize,
    pub mesh: f64,
    pub norm: f64,
    pub decay_q: Option<f64>,
    /// `max_f ‖P̃f - Pf‖∞` over the probes.
    pub change: f64,
    /// `change · sqrt(|I| / (b - a))`, bounded along the sequence.
    pub scaled_change: f64,
}

impl RefineStep {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.weight.clone(),
            self.step.to_string(),
            self.split.to_string(),
            fmt_f64(self.split_length),
            self.intervals.to_string(),
            fmt_f64(self.mesh),
            fmt_f64(self.norm),
            self.decay_q.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.change),
            fmt_f64(self.scaled_change),
        ]
    }
}

pub const REFINE_HEADER: [&str; 11] = [
    "k",
    "weight",
    "step",
    "split",
    "split_length",
    "intervals",
    "mesh",
    "norm",
    "decay_q",
    "change",
    "scaled_change",
];

#[derive(Debug, Clone, Serialize)]
pub struct RefineCell {
    pub k: usize,
    pub weight: String,
    pub epsilon: f64,
    pub initial_norm: f64,
    pub schedule: Vec<usize>,
    pub simulated: Vec<usize>,
    pub schedule_matches: bool,
    pub max_change: f64,
    /// Every change within `‖P‖ + ‖P̃‖`.
    pub triangle_ok: bool,
    /// Largest scaled change in the second half of the sequence over the first half.
    pub drift: Option<f64>,
    pub bounded: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineSummary {
    pub schema: String,
    pub seed: u64,
    pub cells: Vec<RefineCell>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub steps: Vec<RefineStep>,
    pub summary: RefineSummary,
}

/// Largest `|g(x) - f(x)|` over `samples` points inside every interval of `fine`
/// and the breakpoints, for splines `g` on `fine` and `f` on `coarse`.
fn sup_difference(
    fine: &BSplineBasis,
    g: &[f64],
    coarse: &BSplineBasis,
    f: &[f64],
    samples: usize,
) -> Result<f64> {
    let p = fine.partition();
    let mut worst = 0.0f64;
    for m in 0..p.intervals() {
        let (lo, hi) = p.grid_interval(m);
        for s in 0..=samples {
            let x = lo + (hi - lo) * (s as f64 + 0.5) / (samples + 1) as f64;
            let d = fine.eval_spline(g, x)? - coarse.eval_spline(f, x)?;
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// Runs the insertion sequence for one weight system from `start`.
pub fn refine_cell(
    weights: &WeightSystem,
    start: &Partition,
    eps: f64,
    probes: &[Probe],
    samples: usize,
    norm: &NormOptions,
) -> Result<(Vec<RefineStep>, RefineCell)> {
    let k = weights.order();
    let (a, b) = weights.interval();
    let lengths: Vec<f64> = start.breakpoints().windows(2).map(|w| w[1] - w[0]).collect();
    let simulated = simulate_schedule(&lengths, eps);
    let mut cur = ProjectionOperator::new(BSplineBasis::new(start, weights)?)?;
    let initial_norm = cur.lebesgue_norm(norm)?.norm;
    let mut prev_norm = initial_norm;
    let mut steps = Vec::new();
    let mut triangle_ok = true;
    while cur.basis().partition().mesh() > eps {
        let (part, split) = refine_largest(cur.basis().partition())?;
        let (lo, hi) = cur.basis().partition().grid_interval(split);
        let next = ProjectionOperator::new(BSplineBasis::new(&part, weights)?)?;
        let rep = next.lebesgue_norm(norm)?;
        let mut all: Vec<Probe> = probes.to_vec();
        all.extend(sign_probes(cur.basis().partition()).into_iter().take(1));
        let mut change = 0.0f64;
        for f in &all {
            let g = next.project(f.as_ref())?;
            let h = cur.project(f.as_ref())?;
            change = change.max(sup_difference(next.basis(), &g, cur.basis(), &h, samples)?);
        }
        triangle_ok &= change <= (prev_norm + rep.norm) * (1.0 + 1e-9);
        steps.push(RefineStep {
            k,
            weight: weights.tag(),
            step: steps.len() + 1,
            split,
            split_length: hi - lo,
            intervals: part.intervals(),
            mesh: part.mesh(),
            norm: rep.norm,
            decay_q: rep.decay.map(|d| d.q),
            change,
            scaled_change: change * ((hi - lo) / (b - a)).sqrt(),
        });
        prev_norm = rep.norm;
        cur = next;
    }
    let schedule: Vec<usize> = steps.iter().map(|s| s.split).collect();
    let max_change = steps.iter().map(|s| s.change).fold(0.0, f64::max);
    let drift = (steps.len() >= 2).then(|| {
        let half = steps.len() / 2;
        let first = steps[..half].iter().map(|s| s.scaled_change).fold(0.0, f64::max);
        let second = steps[half..].iter().map(|s| s.scaled_change).fold(0.0, f64::max);
        second / first
    });
    let cell = RefineCell {
        k,
        weight: weights.tag(),
        epsilon: eps,
        initial_norm,
        schedule_matches: schedule == simulated,
        schedule,
        simulated,
        max_change,
        triangle_ok,
        drift,
        bounded: triangle_ok && drift.is_none_or(|d| d <= 2.0),
        error: None,
    };
    Ok((steps, cell))
}

pub fn run_refinement_experiment(cfg: &ExperimentConfig) -> Result<RefineOutcome> {
    cfg.validate()?;
    let [a, b] = cfg.interval;
    let rs = &cfg.refine;
    let spec = MeshSpec {
        family: rs.family,
        n: rs.initial_n,
        seed: cfg.seed,
        a,
        b,
    };
    let eps = cfg.epsilon();
    let norm = NormOptions {
        points_per_interval: cfg.norm.points_per_interval,
        refine: cfg.norm.refine,
        parallel: cfg.parallel,
    };
    let mut steps = Vec::new();
    let mut cells = Vec::new();
    for &k in &cfg.orders {
        for w in &cfg.weights {
            let ws = w.system(k, a, b)?;
            let run = || -> Result<(Vec<RefineStep>, RefineCell)> {
                let start = generate_mesh(&spec, k)?;
                let mut probes = sign_probes(&start);
                probes.extend(smooth_probes(rs.smooth_probes, rs.probe_seed, a, b));
                refine_cell(&ws, &start, eps, &probes, rs.samples_per_interval, &norm)
            };
            match run() {
                Ok((s, c)) => {
                    steps.extend(s);
                    cells.push(c);
                }
                Err(e) => cells.push(RefineCell {
                    k,
                    weight: ws.tag(),
                    epsilon: eps,
                    initial_norm: f64::NAN,
                    schedule: Vec::new(),
                    simulated: Vec::new(),
                    schedule_matches: false,
                    max_change: f64::NAN,
                    triangle_ok: false,
                    drift: None,
                    bounded: false,
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    let passed = cells.iter().all(|c| c.schedule_matches && c.bounded);
    Ok(RefineOutcome {
        steps,
        summary: RefineSummary {
            schema: "chebspline-refine-summary/1".into(),
            seed: cfg.seed,
            cells,
            passed,
        },
    })
}

pub fn write_refinement(out: &RefineOutcome, dir: &Path, prefix: &str) -> Result<(PathBuf, PathBuf)> {
    let csv = output_path(dir, prefix, "refine", "csv")?;
    let json = output_path(dir, prefix, "refine", "json")?;
    let records: Vec<Vec<String>> = out.steps.iter().map(RefineStep::record).collect();
    let file = std::fs::File::create(&csv).map_err(|e| Error::Io(format!("{}: {e}", csv.display())))?;
    write_csv(std::io::BufWriter::new(file), &REFINE_HEADER, &records)?;
    write_json(&json, &out.summary)?;
    Ok((csv, json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_spaces_project_coarse_splines_identically() {
        let ws = WeightSystem::preset("exponential", 2, 0.0, 1.0).unwrap();
        let coarse = Partition::new(vec![0.0, 0.3, 0.55, 1.0], 2).unwrap();
        let cb = BSplineBasis::new(&coarse, &ws).unwrap();
        let c = vec![0.3, -1.0, 0.5, 2.0];
        let f = {
            let cb = cb.clone();
            let c = c.clone();
            move |x: f64| cb.eval_spline(&c, x).unwrap()
        };
        let (fine, _) = refine_largest(&coarse).unwrap();
        let p = ProjectionOperator::new(cb.clone()).unwrap();
        let q = ProjectionOperator::new(BSplineBasis::new(&fine, &ws).unwrap()).unwrap();
        let d = sup_difference(q.basis(), &q.project(&f).unwrap(), p.basis(), &p.project(&f).unwrap(), 8).unwrap();
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn short_run() {
        let cfg = ExperimentConfig {
            orders: vec![2],
            weights: vec![super::super::config::WeightSpec::Constant],
            epsilon: Some(0.2),
            ..Default::default()
        };
        let out = run_refinement_experiment(&cfg).unwrap();
        let cell = &out.summary.cells[0];
        assert!(cell.error.is_none(), "{cell:?}");
        assert!(cell.schedule_matches);
        assert!(!cell.schedule.is_empty());
        assert!(cell.triangle_ok);
    }
}
