//! Basis dump: every basis function, the kernel and the boundary functions on a grid.

use std::path::{Path, PathBuf};

use super::report::{fmt_f64, output_path, write_csv};
use crate::bspline::BSplineBasis;
use crate::ect::WeightSystem;
use crate::error::{Error, Result};
use crate::extremal::{build_phi, build_sigma, derive_sigma_weights, PhiFunction, SigmaSpline};
use crate::partition::Partition;
use crate::projection::ProjectionOperator;

pub struct BasisDump {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Samples `per_interval + 1` points on each closed grid interval, evaluating
/// from that interval so that one-sided values at breakpoints both appear.
///
/// Columns: `x`, `interval`, `M_i`, `N_i`, `K(tau, x)`, and for `k >= 2`
/// `phi` and `sigma`.
pub fn basis_dump(weights: &WeightSystem, part: &Partition, per_interval: usize, tau: Option<f64>) -> Result<BasisDump> {
    if per_interval == 0 {
        return Err(Error::Config("basis dump needs at least one sample per interval".into()));
    }
    let basis = BSplineBasis::new(part, weights)?;
    let proj = ProjectionOperator::new(basis.clone())?;
    let (a, b) = part.interval();
    let tau = tau.unwrap_or(a);
    if !(a..=b).contains(&tau) {
        return Err(Error::Config(format!("tau = {tau} lies outside [{a}, {b}]")));
    }
    let kernel = proj.kernel_coefficients(tau, None)?;
    let boundary: Option<(SigmaSpline, PhiFunction)> = if weights.order() >= 2 {
        let sigma = build_sigma(&derive_sigma_weights(weights)?, part)?;
        let phi = build_phi(&sigma, &basis)?;
        Some((sigma, phi))
    } else {
        None
    };
    let dim = basis.dim();
    let mut header = vec!["x".to_string(), "interval".to_string()];
    header.extend((0..dim).map(|i| format!("M_{i}")));
    header.extend((0..dim).map(|i| format!("N_{i}")));
    header.push("kernel".into());
    if boundary.is_some() {
        header.push("phi".into());
        header.push("sigma".into());
    }
    let mut rows = Vec::new();
    for m in 0..part.intervals() {
        let (lo, hi) = part.grid_interval(m);
        for s in 0..=per_interval {
            // Nudge the endpoints inward so evaluation uses interval m.
            let t = s as f64 / per_interval as f64;
            let x = lo + (hi - lo) * t;
            let xe = if s == 0 {
                lo + (hi - lo) * 1e-14
            } else if s == per_interval {
                hi - (hi - lo) * 1e-14
            } else {
                x
            };
            let (first, vals) = basis.eval_all(xe)?;
            let mut full = vec![0.0; dim];
            full[first..first + vals.len()].copy_from_slice(&vals);
            let mut row = vec![fmt_f64(x), m.to_string()];
            row.extend(full.iter().map(|v| fmt_f64(*v)));
            row.extend(full.iter().enumerate().map(|(i, v)| fmt_f64(basis.alpha(i) * v)));
            row.push(fmt_f64(kernel.iter().zip(&full).map(|(c, v)| c * v).sum()));
            if let Some((sigma, phi)) = &boundary {
                row.push(fmt_f64(phi.eval(xe)?));
                row.push(fmt_f64(sigma.eval(xe)?));
            }
            rows.push(row);
        }
    }
    Ok(BasisDump { header, rows })
}

pub fn write_dump(dump: &BasisDump, dir: &Path, prefix: &str) -> Result<PathBuf> {
    let path = output_path(dir, prefix, "basis", "csv")?;
    let file = std::fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<&str> = dump.header.iter().map(String::as_str).collect();
    write_csv(std::io::BufWriter::new(file), &header, &dump.rows)?;
    Ok(path)
}
