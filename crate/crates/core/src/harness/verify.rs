//! The invariant suite: every structural identity checked on the configured
//! cells, with a self-test that a corrupted basis is caught.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::classical::ClassicalSplines;
use super::config::{ExperimentConfig, Tolerances};
use super::mesh::{generate_mesh, refine_to, MeshSpec};
use super::report::{fmt_f64, output_path, write_csv, write_json};
use super::sweep::trial_seed;
use crate::bspline::BSplineBasis;
use crate::ect::WeightSystem;
use crate::error::{Error, Result};
use crate::extremal::{build_phi, build_sigma, build_sigma_at_b, derive_sigma_weights, PhiFunction, SigmaSpline};
use crate::partition::Partition;
use crate::projection::{NormOptions, ProjectionOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub k: usize,
    pub weight: String,
    pub mesh: String,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub schema: String,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub ok: bool,
    pub checks: Vec<Check>,
}

struct Cell<'a> {
    k: usize,
    weight: String,
    mesh: String,
    out: &'a mut Vec<Check>,
}

impl Cell<'_> {
    fn push(&mut self, name: &str, value: Option<f64>, tolerance: Option<f64>, status: Status, note: String) {
        self.out.push(Check {
            name: name.into(),
            k: self.k,
            weight: self.weight.clone(),
            mesh: self.mesh.clone(),
            value,
            tolerance,
            status,
            note,
        });
    }

    /// Passes when `value <= tol`; an error fails the check.
    fn at_most(&mut self, name: &str, value: Result<f64>, tol: f64) {
        match value {
            Ok(v) => {
                let s = if v <= tol { Status::Pass } else { Status::Fail };
                self.push(name, Some(v), Some(tol), s, String::new());
            }
            Err(e) => self.push(name, None, Some(tol), Status::Fail, e.to_string()),
        }
    }

    fn holds(&mut self, name: &str, value: Result<bool>, note: &str) {
        match value {
            Ok(true) => self.push(name, None, None, Status::Pass, note.into()),
            Ok(false) => self.push(name, None, None, Status::Fail, note.into()),
            Err(e) => self.push(name, None, None, Status::Fail, e.to_string()),
        }
    }

    fn skip(&mut self, name: &str, note: &str) {
        self.push(name, None, None, Status::Skip, note.into());
    }
}

fn interior_samples(p: &Partition, per: usize) -> Vec<f64> {
    let mut xs = Vec::new();
    for m in 0..p.intervals() {
        let (lo, hi) = p.grid_interval(m);
        for s in 1..=per {
            xs.push(lo + (hi - lo) * s as f64 / (per + 1) as f64);
        }
    }
    xs
}

/// `max |Σ N_i - u_1| / max |u_1|` on interior samples.
pub fn unity_deviation(basis: &BSplineBasis) -> Result<f64> {
    let w = basis.weights().weight(0);
    let (mut dev, mut scale) = (0.0f64, 0.0f64);
    for x in interior_samples(basis.partition(), 7) {
        let (first, vals) = basis.eval_all(x)?;
        let s: f64 = vals.iter().enumerate().map(|(q, v)| basis.alpha(first + q) * v).sum();
        let u = w.value(x);
        dev = dev.max((s - u).abs());
        scale = scale.max(u.abs());
    }
    Ok(dev / scale)
}

/// `max_ij |λ_i N_j - δ_ij|`.
pub fn duality_deviation(basis: &BSplineBasis) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..basis.dim() {
        let l = basis.dual_functional(i)?;
        for j in 0..basis.dim() {
            let v = l.apply(&|x| basis.n(j, x).unwrap_or(f64::NAN));
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    Ok(worst)
}

/// `max |c' - c| / max |c|` for `c'` the coefficients of `P(Σ c_i M_i)`.
pub fn exactness_residual(proj: &ProjectionOperator, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = proj.basis();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let c: Vec<f64> = (0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |x: f64| basis.eval_spline(&c, x).unwrap_or(f64::NAN);
        let back = proj.project(&f)?;
        let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = c.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(err / scale);
    }
    Ok(worst)
}

fn relative_max(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut d, mut s) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        d = d.max((a - b).abs());
        s = s.max(b.abs());
    }
    d / s.max(f64::MIN_POSITIVE)
}

/// `w ≡ 1`: B-spline values, projections and Lebesgue values against Cox–de Boor.
pub fn classical_deviation(proj: &ProjectionOperator) -> Result<f64> {
    let basis = proj.basis();
    let p = basis.partition();
    let cl = ClassicalSplines::new(p)?;
    let mut worst = 0.0f64;
    for x in interior_samples(p, 5) {
        let (first, vals) = basis.eval_all(x)?;
        let theirs = cl.values(x, None);
        let mut ours = vec![0.0; basis.dim()];
        ours[first..first + vals.len()].copy_from_slice(&vals);
        worst = worst.max(relative_max(ours.into_iter().zip(theirs)));
    }
    let f = |x: f64| (3.0 * x).sin() + x * x;
    worst = worst.max(relative_max(proj.project(&f)?.into_iter().zip(cl.project(&f))));
    for m in [0, p.intervals() / 2, p.intervals() - 1] {
        let (lo, hi) = p.grid_interval(m);
        for t in [lo, 0.3 * lo + 0.7 * hi] {
            let ours = proj.lebesgue_on(t, m)?;
            let theirs = cl.lebesgue(t, Some(lo));
            worst = worst.max((ours - theirs).abs() / theirs);
        }
    }
    Ok(worst)
}

fn sigma_checks(cell: &mut Cell, tag: &str, sigma: Result<SigmaSpline>, basis: &BSplineBasis, proj: &ProjectionOperator, tol: &Tolerances, fine: bool) {
    let name = |s: &str| format!("{s}{tag}");
    let sigma = match sigma {
        Ok(s) => s,
        Err(e) => {
            cell.push(&name("sigma_construction"), None, None, Status::Fail, e.to_string());
            return;
        }
    };
    cell.at_most(&name("sigma_kernel_residual"), Ok(sigma.system().kernel_residual()), 1e-7);
    cell.at_most(
        &name("sigma_normalization"),
        sigma.normalization().map(|v| (v - 1.0).abs()),
        tol.sigma_normalization,
    );
    cell.at_most(&name("sigma_zeros"), sigma.zero_residual(), tol.sigma_zeros);
    cell.holds(&name("sigma_sign_pattern"), sigma.sign_scan(64).map(|s| s.ok()), "dense scan, 64 samples per interval");
    cell.at_most(&name("h_conservation"), sigma.h_deviation(64), tol.h_conservation);
    let phi = match build_phi(&sigma, basis) {
        Ok(p) => p,
        Err(e) => {
            cell.push(&name("phi_construction"), None, None, Status::Fail, e.to_string());
            return;
        }
    };
    cell.at_most(
        &name("phi_endpoint_value"),
        phi.eval(phi.endpoint()).map(|v| (v - phi.endpoint_value()).abs()),
        tol.phi_endpoint,
    );
    cell.at_most(
        &name("endpoint_identity"),
        phi.endpoint_identity(proj).map(|(l, r)| (l - r).abs()),
        tol.endpoint_identity,
    );
    if fine {
        alternation_checks(cell, tag, &phi, "");
    }
}

fn alternation_checks(cell: &mut Cell, tag: &str, phi: &PhiFunction, note: &str) {
    let bad = phi.alternation_violations();
    cell.holds(&format!("phi_alternation{tag}"), Ok(bad.is_empty()), &format!("violations at {bad:?}{note}"));
    let m = phi.min_abs_inner();
    cell.push(
        &format!("phi_lower_bound{tag}"),
        Some(m),
        None,
        if m > 0.0 { Status::Pass } else { Status::Fail },
        format!("min_j |<phi, M_j>|{note}"),
    );
}

/// Alternation only holds for `|Δ| <= eps`, so coarse meshes are refined first.
fn refined_alternation(cell: &mut Cell, weights: &WeightSystem, part: &Partition, eps: f64) {
    let run = || -> Result<(PhiFunction, PhiFunction, usize)> {
        let (fine, _) = refine_to(part, eps)?;
        let basis = BSplineBasis::new(&fine, weights)?;
        let sys = derive_sigma_weights(weights)?;
        let a = build_phi(&build_sigma(&sys, &fine)?, &basis)?;
        let b = build_phi(&build_sigma_at_b(weights, &fine)?, &basis)?;
        Ok((a, b, fine.intervals()))
    };
    match run() {
        Ok((a, b, n)) => {
            let note = format!("; refined to {n} intervals");
            alternation_checks(cell, "", &a, &note);
            alternation_checks(cell, "_at_b", &b, &note);
        }
        Err(e) => cell.push("phi_alternation", None, None, Status::Fail, e.to_string()),
    }
}

/// All checks for one weight system on one partition.
pub fn verify_cell(weights: &WeightSystem, part: &Partition, label: &str, tol: &Tolerances, eps: f64, seed: u64, out: &mut Vec<Check>) {
    let k = weights.order();
    let mut cell = Cell {
        k,
        weight: weights.tag(),
        mesh: label.into(),
        out,
    };
    let basis = match BSplineBasis::new(part, weights) {
        Ok(b) => b,
        Err(e) => {
            cell.push("basis_construction", None, None, Status::Fail, e.to_string());
            return;
        }
    };
    let dim = basis.dim();
    let norm_err = (0..dim)
        .map(|i| (basis.space().integral(k, i) - 1.0).abs())
        .fold(0.0, f64::max);
    cell.at_most("normalization", Ok(norm_err), tol.normalization);
    cell.at_most("partition_of_unity", unity_deviation(&basis), tol.unity);
    let mut corrupted = basis.clone();
    corrupted.corrupt_alpha(dim / 2, 2.0);
    cell.holds(
        "self_test_corrupted_alpha",
        unity_deviation(&corrupted).map(|d| d > tol.unity),
        "doubling one α_i must break the partition of unity",
    );
    if part.mesh() <= 1.0 {
        cell.at_most("duality", duality_deviation(&basis), tol.duality);
    } else {
        cell.skip("duality", "mesh above 1");
    }
    let alpha_err: Result<f64> = (0..dim).try_fold(0.0f64, |m, i| {
        let a = basis.alpha(i);
        Ok(m.max((basis.alpha_via_unity(i)? - a).abs() / a))
    });
    cell.at_most("alpha_cross_check", alpha_err, tol.cross_check);
    if k >= 2 {
        let h_err: Result<f64> = (0..dim).try_fold(0.0f64, |m, i| {
            let h = basis.h(i)?;
            Ok(m.max((basis.h_via_divided_differences(i)? - h).abs() / h.abs()))
        });
        cell.at_most("h_cross_check", h_err, tol.cross_check);
    } else {
        cell.skip("h_cross_check", "k = 1");
    }
    let proj = match ProjectionOperator::new(basis.clone()) {
        Ok(p) => p,
        Err(e) => {
            cell.push("projection", None, None, Status::Fail, e.to_string());
            return;
        }
    };
    cell.at_most("exactness", exactness_residual(&proj, 5, seed), tol.exactness);
    let bad = proj.checkerboard_violations();
    cell.holds("checkerboard", Ok(bad.is_empty()), &format!("{} violations", bad.len()));
    match proj.lebesgue_norm(&NormOptions::default()) {
        Ok(rep) => {
            cell.push("operator_norm", Some(rep.norm), None, Status::Pass, format!("argmax {}", rep.argmax));
            match rep.decay {
                Some(d) => cell.push(
                    "decay_below_one",
                    Some(d.q),
                    Some(1.0),
                    if d.q < 1.0 { Status::Pass } else { Status::Fail },
                    String::new(),
                ),
                None => cell.skip("decay_below_one", "fit unavailable"),
            }
        }
        Err(e) => cell.push("operator_norm", None, None, Status::Fail, e.to_string()),
    }
    if weights.is_constant_one() {
        cell.at_most("classical_oracle", classical_deviation(&proj), tol.classical);
    }
    if k < 2 {
        for name in ["sigma", "phi", "h_conservation"] {
            cell.skip(name, "k = 1: the boundary spline is not defined");
        }
        return;
    }
    let fine = part.mesh() <= eps;
    let sigma = derive_sigma_weights(weights).and_then(|s| build_sigma(&s, part));
    sigma_checks(&mut cell, "", sigma, &basis, &proj, tol, fine);
    sigma_checks(&mut cell, "_at_b", build_sigma_at_b(weights, part), &basis, &proj, tol, fine);
    if !fine {
        refined_alternation(&mut cell, weights, part, eps);
    }
}

pub fn run_verify_suite(cfg: &ExperimentConfig) -> Result<VerifySummary> {
    cfg.validate()?;
    let [a, b] = cfg.interval;
    let mut checks = Vec::new();
    for &k in &cfg.orders {
        for w in &cfg.weights {
            let ws = w.system(k, a, b)?;
            for family in &cfg.families {
                let spec = MeshSpec {
                    family: *family,
                    n: cfg.verify_n,
                    seed: trial_seed(cfg.seed, cfg.verify_n, 0),
                    a,
                    b,
                };
                let label = format!("{family} n={}", cfg.verify_n);
                match generate_mesh(&spec, k) {
                    Ok(part) => verify_cell(&ws, &part, &label, &cfg.tolerances, cfg.epsilon(), spec.seed, &mut checks),
                    Err(e) => checks.push(Check {
                        name: "mesh".into(),
                        k,
                        weight: ws.tag(),
                        mesh: label,
                        value: None,
                        tolerance: None,
                        status: Status::Fail,
                        note: e.to_string(),
                    }),
                }
            }
        }
    }
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let (passed, failed, skipped) = (count(Status::Pass), count(Status::Fail), count(Status::Skip));
    Ok(VerifySummary {
        schema: "chebspline-verify/1".into(),
        seed: cfg.seed,
        passed,
        failed,
        skipped,
        ok: failed == 0,
        checks,
    })
}

pub const VERIFY_HEADER: [&str; 8] = ["name", "k", "weight", "mesh", "value", "tolerance", "status", "note"];

impl Check {
    pub fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let status = match self.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        };
        vec![
            self.name.clone(),
            self.k.to_string(),
            self.weight.clone(),
            self.mesh.clone(),
            opt(self.value),
            opt(self.tolerance),
            status.into(),
            self.note.clone(),
        ]
    }
}

/// Writes `prefix-verify.json` and `prefix-verify.csv`, returning both paths.
pub fn write_verify(summary: &VerifySummary, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let json = output_path(dir, prefix, "verify", "json")?;
    write_json(&json, summary)?;
    let csv = output_path(dir, prefix, "verify", "csv")?;
    let records: Vec<Vec<String>> = summary.checks.iter().map(Check::record).collect();
    let file = std::fs::File::create(&csv).map_err(|e| Error::Io(format!("{}: {e}", csv.display())))?;
    write_csv(std::io::BufWriter::new(file), &VERIFY_HEADER, &records)?;
    Ok(vec![json, csv])
}
