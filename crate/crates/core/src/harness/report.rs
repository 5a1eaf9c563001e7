//! Report rows, CSV and JSON output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// First line of every CSV report.
pub const CSV_SCHEMA: &str = "# schema: chebspline-report/1";

/// One trial of a sweep. Missing values are `None` and print as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub k: usize,
    pub weight: String,
    pub family: String,
    pub n: usize,
    pub seed: u64,
    pub mesh: f64,
    pub norm: Option<f64>,
    pub at_a: Option<f64>,
    pub at_b: Option<f64>,
    pub min_phi: Option<f64>,
    pub h_deviation: Option<f64>,
    pub decay_q: Option<f64>,
    pub alternation_ok: Option<bool>,
    pub checkerboard_ok: Option<bool>,
    pub classical_ok: Option<bool>,
    /// `ok`, or the error that stopped the trial.
    pub status: String,
    pub wall_ms: Option<f64>,
}

pub const CSV_HEADER: [&str; 17] = [
    "k",
    "weight",
    "family",
    "n",
    "seed",
    "mesh",
    "norm",
    "at_a",
    "at_b",
    "min_phi",
    "h_deviation",
    "decay_q",
    "alternation_ok",
    "checkerboard_ok",
    "classical_ok",
    "status",
    "wall_ms",
];

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

impl ReportRow {
    pub fn failed(k: usize, weight: &str, family: &str, n: usize, seed: u64, err: &Error) -> Self {
        Self {
            k,
            weight: weight.into(),
            family: family.into(),
            n,
            seed,
            mesh: f64::NAN,
            norm: None,
            at_a: None,
            at_b: None,
            min_phi: None,
            h_deviation: None,
            decay_q: None,
            alternation_ok: None,
            checkerboard_ok: None,
            classical_ok: None,
            status: format!("error: {err}"),
            wall_ms: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.weight.clone(),
            self.family.clone(),
            self.n.to_string(),
            self.seed.to_string(),
            if self.mesh.is_finite() { fmt_f64(self.mesh) } else { String::new() },
            opt_f64(self.norm),
            opt_f64(self.at_a),
            opt_f64(self.at_b),
            opt_f64(self.min_phi),
            opt_f64(self.h_deviation),
            opt_f64(self.decay_q),
            opt_bool(self.alternation_ok),
            opt_bool(self.checkerboard_ok),
            opt_bool(self.classical_ok),
            self.status.clone(),
            opt_f64(self.wall_ms),
        ]
    }
}

/// Writes a schema line, a header and the records.
pub fn write_csv<W: Write>(mut out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let records: Vec<Vec<String>> = rows.iter().map(ReportRow::record).collect();
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(std::io::BufWriter::new(file), &CSV_HEADER, &records)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, s + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `dir/prefix-kind.ext`, creating `dir`.
pub fn output_path(dir: &Path, prefix: &str, kind: &str, ext: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(format!("{prefix}-{kind}.{ext}")))
}

/// Replaces non-finite floats by `null` so the JSON stays valid.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
