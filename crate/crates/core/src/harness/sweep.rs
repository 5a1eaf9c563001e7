//! Operator-norm sweeps over mesh families, sizes and random trials.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::classical::ClassicalSplines;
use super::config::{ExperimentConfig, WeightSpec};
use super::mesh::{generate_mesh, MeshFamily, MeshSpec};
use super::report::{finite, output_path, write_json, write_rows, ReportRow};
use crate::bspline::BSplineBasis;
use crate::ect::WeightSystem;
use crate::error::Result;
use crate::extremal::{build_phi, build_sigma, derive_sigma_weights, SigmaSystem};
use crate::projection::{NormOptions, ProjectionOperator};

/// SplitMix64 finalizer; spreads `(base, n, trial)` over the seed space.
pub fn trial_seed(base: u64, n: usize, trial: usize) -> u64 {
    let mut z = base
        .wrapping_add((n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a trial computes besides the norm.
#[derive(Debug, Clone, Copy)]
pub struct TrialOptions {
    pub norm: NormOptions,
    pub phi: bool,
    /// Interior samples per interval for the `H` deviation.
    pub h_samples: usize,
    pub classical_tolerance: Option<f64>,
    pub timing: bool,
}

impl TrialOptions {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            norm: NormOptions {
                points_per_interval: cfg.norm.points_per_interval,
                refine: cfg.norm.refine,
                parallel: false,
            },
            phi: true,
            h_samples: 8,
            classical_tolerance: Some(cfg.tolerances.classical),
            timing: cfg.output.timing,
        }
    }
}

/// One mesh of one cell.
pub fn evaluate_trial(
    weights: &WeightSystem,
    sigma: Option<&SigmaSystem>,
    spec: &MeshSpec,
    opts: &TrialOptions,
) -> ReportRow {
    let k = weights.order();
    let family = spec.family.to_string();
    let start = Instant::now();
    let run = || -> Result<ReportRow> {
        let part = generate_mesh(spec, k)?;
        let basis = BSplineBasis::new(&part, weights)?;
        let proj = ProjectionOperator::new(basis)?;
        let rep = proj.lebesgue_norm(&opts.norm)?;
        let mut row = ReportRow {
            k,
            weight: weights.tag(),
            family: family.clone(),
            n: spec.n,
            seed: spec.seed,
            mesh: part.mesh(),
            norm: Some(rep.norm),
            at_a: Some(rep.at_a),
            at_b: Some(rep.at_b),
            min_phi: None,
            h_deviation: None,
            decay_q: rep.decay.map(|d| d.q),
            alternation_ok: None,
            checkerboard_ok: Some(proj.checkerboard_violations().is_empty()),
            classical_ok: None,
            status: "ok".into(),
            wall_ms: None,
        };
        if let (true, Some(sys)) = (opts.phi, sigma) {
            // A failed boundary construction keeps the norm columns.
            let mut boundary = || -> Result<()> {
                let s = build_sigma(sys, &part)?;
                let phi = build_phi(&s, proj.basis())?;
                row.min_phi = Some(phi.min_abs_inner());
                row.alternation_ok = Some(phi.alternation_violations().is_empty());
                row.h_deviation = Some(s.h_deviation(opts.h_samples)?);
                Ok(())
            };
            if let Err(e) = boundary() {
                row.status = format!("error: sigma: {e}");
            }
        }
        if let (true, Some(tol)) = (weights.is_constant_one(), opts.classical_tolerance) {
            let cl = ClassicalSplines::new(&part)?;
            let mut ok = true;
            let m = part.locate(rep.argmax)?;
            let mut points = vec![(rep.argmax, m), (part.interval().0, 0)];
            let (lo, hi) = part.grid_interval(part.intervals() / 2);
            points.push((0.5 * (lo + hi), part.intervals() / 2));
            for (t, m) in points {
                let ours = proj.lebesgue_on(t, m)?;
                let theirs = cl.lebesgue(t, Some(part.grid_interval(m).0));
                ok &= (ours - theirs).abs() <= tol * theirs;
            }
            row.classical_ok = Some(ok);
        }
        Ok(row)
    };
    let mut row = run().unwrap_or_else(|e| ReportRow::failed(k, &weights.tag(), &family, spec.n, spec.seed, &e));
    if opts.timing {
        row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    row
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub k: usize,
    pub weight: String,
    /// Largest operator norm per `n`.
    pub max_norm: BTreeMap<usize, f64>,
    /// Largest norm at the top of the ladder over the one at a quarter of it
    /// (or the bottom of the ladder).
    pub trend_ratio: Option<f64>,
    /// Strictly increasing maxima along the whole ladder.
    pub monotone_growth: bool,
    pub max_q: Option<f64>,
    /// Range of `min_j |⟨φ, M_j⟩|` over trials with `|Δ| <= ε`.
    pub min_phi_low: Option<f64>,
    pub min_phi_high: Option<f64>,
    pub rows: usize,
    pub failures: usize,
    pub passed: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub schema: String,
    pub seed: u64,
    pub epsilon: f64,
    pub cells: Vec<CellSummary>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ReportRow>,
    pub summary: SweepSummary,
}

/// The maxima of one column per `n`.
fn max_by_n(rows: &[&ReportRow], f: impl Fn(&ReportRow) -> Option<f64>) -> BTreeMap<usize, f64> {
    let mut out: BTreeMap<usize, f64> = BTreeMap::new();
    for r in rows {
        if let Some(v) = f(r) {
            let e = out.entry(r.n).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
    }
    out
}

pub fn summarize_cell(k: usize, weight: &str, rows: &[&ReportRow], eps: f64) -> CellSummary {
    let max_norm = max_by_n(rows, |r| r.norm);
    let ns: Vec<usize> = max_norm.keys().copied().collect();
    let trend_ratio = ns.last().and_then(|&top| {
        let base = if max_norm.contains_key(&(top / 4)) && top >= 4 { top / 4 } else { ns[0] };
        (base != top).then(|| max_norm[&top] / max_norm[&base])
    });
    let vals: Vec<f64> = max_norm.values().copied().collect();
    let monotone_growth = vals.len() >= 3 && vals.windows(2).all(|w| w[1] > w[0]);
    let max_q = rows
        .iter()
        .filter_map(|r| r.decay_q)
        .fold(None, |m: Option<f64>, q| Some(m.map_or(q, |m| m.max(q))));
    let fine: Vec<f64> = rows
        .iter()
        .filter(|r| r.mesh <= eps)
        .filter_map(|r| r.min_phi)
        .collect();
    let min_phi_low = fine.iter().copied().reduce(f64::min);
    let min_phi_high = fine.iter().copied().reduce(f64::max);
    let failures = rows.iter().filter(|r| !r.is_ok()).count();
    let mut passed = BTreeMap::new();
    passed.insert("no_failures".into(), failures == 0);
    passed.insert(
        "bounded_trend".into(),
        trend_ratio.is_none_or(|t| (t - 1.0).abs() < 0.1) && !monotone_growth,
    );
    passed.insert("decay_below_one".into(), max_q.is_none_or(|q| q < 1.0));
    passed.insert(
        "checkerboard".into(),
        rows.iter().all(|r| r.checkerboard_ok != Some(false)),
    );
    if k >= 2 {
        passed.insert(
            "alternation".into(),
            rows.iter()
                .filter(|r| r.mesh <= eps)
                .all(|r| r.alternation_ok != Some(false)),
        );
        passed.insert(
            "phi_stable".into(),
            match (min_phi_low, min_phi_high) {
                (Some(l), Some(h)) => l > 0.0 && h / l < 2.0,
                _ => true,
            },
        );
    }
    if rows.iter().any(|r| r.classical_ok.is_some()) {
        passed.insert(
            "classical".into(),
            rows.iter().all(|r| r.classical_ok != Some(false)),
        );
    }
    CellSummary {
        k,
        weight: weight.into(),
        max_norm,
        trend_ratio: trend_ratio.and_then(finite),
        monotone_growth,
        max_q,
        min_phi_low,
        min_phi_high,
        rows: rows.len(),
        failures,
        passed,
    }
}

/// All cells `(k, weight)` of the configuration, over every family, `n` and trial.
pub fn run_norm_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let [a, b] = cfg.interval;
    let opts = TrialOptions::from_config(cfg);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &k in &cfg.orders {
        for spec in &cfg.weights {
            let start = rows.len();
            let ws = spec.system(k, a, b)?;
            let sigma = if k >= 2 { Some(derive_sigma_weights(&ws)?) } else { None };
            for family in &cfg.families {
                for &n in &cfg.n_ladder {
                    let meshes = mesh_specs(cfg, *family, n);
                    let run = |m: &MeshSpec| evaluate_trial(&ws, sigma.as_ref(), m, &opts);
                    let batch: Vec<ReportRow> = if cfg.parallel {
                        meshes.par_iter().map(run).collect()
                    } else {
                        meshes.iter().map(run).collect()
                    };
                    rows.extend(batch);
                }
            }
            let cell: Vec<&ReportRow> = rows[start..].iter().collect();
            cells.push(summarize_cell(k, &weight_label(spec, &ws), &cell, cfg.epsilon()));
        }
    }
    let passed = cells.iter().all(|c| c.passed.values().all(|&p| p));
    Ok(SweepOutcome {
        rows,
        summary: SweepSummary {
            schema: "chebspline-sweep-summary/1".into(),
            seed: cfg.seed,
            epsilon: cfg.epsilon(),
            cells,
            passed,
        },
    })
}

fn weight_label(_spec: &WeightSpec, ws: &WeightSystem) -> String {
    ws.tag()
}

/// The trials of one `(family, n)`; deterministic families get one trial.
pub fn mesh_specs(cfg: &ExperimentConfig, family: MeshFamily, n: usize) -> Vec<MeshSpec> {
    let trials = if family == MeshFamily::RandomUniform { cfg.trials } else { 1 };
    let [a, b] = cfg.interval;
    (0..trials)
        .map(|t| MeshSpec {
            family,
            n,
            seed: trial_seed(cfg.seed, n, t),
            a,
            b,
        })
        .collect()
}

/// Writes `prefix-sweep.csv` and `prefix-sweep.json` into `dir`.
pub fn write_sweep(outcome: &SweepOutcome, dir: &Path, prefix: &str) -> Result<(PathBuf, PathBuf)> {
    let csv = output_path(dir, prefix, "sweep", "csv")?;
    let json = output_path(dir, prefix, "sweep", "json")?;
    write_rows(&csv, &outcome.rows)?;
    write_json(&json, &outcome.summary)?;
    Ok((csv, json))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            orders: vec![1, 2],
            weights: vec![WeightSpec::Constant],
            n_ladder: vec![4, 8],
            trials: 2,
            ..Default::default()
        }
    }

    #[test]
    fn k1_constant_norm_is_one_and_classical_agrees() {
        let out = run_norm_sweep(&small()).unwrap();
        assert_eq!(out.rows.len(), 8);
        for r in &out.rows {
            assert!(r.is_ok(), "{r:?}");
            assert_eq!(r.classical_ok, Some(true), "{r:?}");
            if r.k == 1 {
                assert!((r.norm.unwrap() - 1.0).abs() < 1e-12);
                assert!(r.min_phi.is_none());
            } else {
                assert!((r.min_phi.unwrap() - 1.0 / 3.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_rows() {
        let a = run_norm_sweep(&small()).unwrap();
        let b = run_norm_sweep(&ExperimentConfig { parallel: false, ..small() }).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn failures_become_rows() {
        let ws = WeightSystem::constant(2, 0.0, 1.0).unwrap();
        let spec = MeshSpec {
            family: MeshFamily::Geometric { ratio: 1e300 },
            n: 4,
            seed: 0,
            a: 0.0,
            b: 1.0,
        };
        let cfg = ExperimentConfig::default();
        let row = evaluate_trial(&ws, None, &spec, &TrialOptions::from_config(&cfg));
        assert!(row.status.starts_with("error"), "{row:?}");
    }
}
