//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mesh::MeshFamily;
use crate::ect::weights::{DEFAULT_AMPLITUDES, DEFAULT_RATES};
use crate::ect::WeightSystem;
use crate::error::{Error, Result};

/// Overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "CHEBSPLINE_OUT_DIR";

/// Highest order accepted when `max_order` is raised.
pub const ORDER_CEILING: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant,
    /// `w_i(x) = exp(rates[i] x)`.
    Exponential {
        #[serde(default)]
        rates: Option<Vec<f64>>,
    },
    /// `w_i(x) = 1 + amplitudes[i] s²` with `s` the relative position in `[a, b]`.
    Polynomial {
        #[serde(default)]
        amplitudes: Option<Vec<f64>>,
    },
}

impl WeightSpec {
    pub fn system(&self, k: usize, a: f64, b: f64) -> Result<WeightSystem> {
        let take = |v: &Option<Vec<f64>>, default: &[f64], what: &str| -> Result<Vec<f64>> {
            let src = v.as_deref().unwrap_or(default);
            if src.len() < k {
                return Err(Error::Config(format!(
                    "{what} has {} entries, order {k} needs {k}",
                    src.len()
                )));
            }
            Ok(src[..k].to_vec())
        };
        match self {
            WeightSpec::Constant => WeightSystem::constant(k, a, b),
            WeightSpec::Exponential { rates } => {
                WeightSystem::exponential(&take(rates, &DEFAULT_RATES, "rates")?, a, b)
            }
            WeightSpec::Polynomial { amplitudes } => WeightSystem::polynomial_perturbation(
                &take(amplitudes, &DEFAULT_AMPLITUDES, "amplitudes")?,
                a,
                b,
            ),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightSpec::Constant => "constant",
            WeightSpec::Exponential { .. } => "exponential",
            WeightSpec::Polynomial { .. } => "polynomial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub normalization: f64,
    pub unity: f64,
    pub duality: f64,
    pub h_conservation: f64,
    pub sigma_zeros: f64,
    pub sigma_normalization: f64,
    pub phi_endpoint: f64,
    pub endpoint_identity: f64,
    pub exactness: f64,
    pub classical: f64,
    /// Agreement of the two computations of `h_i` and of `α_i`.
    pub cross_check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            normalization: 1e-9,
            unity: 1e-8,
            duality: 1e-6,
            h_conservation: 1e-6,
            sigma_zeros: 1e-9,
            sigma_normalization: 1e-9,
            phi_endpoint: 1e-8,
            endpoint_identity: 1e-6,
            exactness: 1e-8,
            classical: 1e-6,
            cross_check: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormSettings {
    /// Lebesgue-function samples per interval; unset means `2k + 3`.
    pub points_per_interval: Option<usize>,
    /// Largest samples refined by golden-section search.
    pub refine: usize,
}

impl Default for NormSettings {
    fn default() -> Self {
        Self {
            points_per_interval: None,
            refine: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSettings {
    /// Coarse starting mesh.
    pub family: MeshFamily,
    pub initial_n: usize,
    /// Smooth random probes in addition to the sign patterns.
    pub smooth_probes: usize,
    pub probe_seed: u64,
    /// Samples per fine interval for `‖P̃f - Pf‖∞`.
    pub samples_per_interval: usize,
}

impl Default for RefineSettings {
    fn default() -> Self {
        Self {
            family: MeshFamily::RandomUniform,
            initial_n: 3,
            smooth_probes: 10,
            probe_seed: 7,
            samples_per_interval: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// File name stem of the reports.
    pub prefix: String,
    /// Record wall time per row; off by default so reruns are byte-identical.
    pub timing: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("chebspline-out"),
            prefix: "run".into(),
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub interval: [f64; 2],
    pub orders: Vec<usize>,
    /// Orders above this are rejected; at most [`ORDER_CEILING`].
    pub max_order: usize,
    pub weights: Vec<WeightSpec>,
    pub families: Vec<MeshFamily>,
    pub n_ladder: Vec<usize>,
    pub trials: usize,
    /// Mesh-size threshold; unset means `(b - a) / 8`.
    pub epsilon: Option<f64>,
    /// Intervals of the meshes used by `verify`.
    pub verify_n: usize,
    pub parallel: bool,
    pub tolerances: Tolerances,
    pub norm: NormSettings,
    pub refine: RefineSettings,
    pub output: OutputSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            interval: [0.0, 1.0],
            orders: vec![2, 3],
            max_order: 4,
            weights: vec![WeightSpec::Constant, WeightSpec::Exponential { rates: None }],
            families: vec![MeshFamily::RandomUniform],
            n_ladder: vec![8, 16, 32, 64, 128],
            trials: 10,
            epsilon: None,
            verify_n: 16,
            parallel: true,
            tolerances: Tolerances::default(),
            norm: NormSettings::default(),
            refine: RefineSettings::default(),
            output: OutputSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        if self.max_order == 0 || self.max_order > ORDER_CEILING {
            return Err(Error::Config(format!(
                "max_order {} outside 1..={ORDER_CEILING}",
                self.max_order
            )));
        }
        if self.orders.is_empty() {
            return Err(Error::Config("no orders given".into()));
        }
        if let Some(k) = self.orders.iter().find(|&&k| k == 0 || k > self.max_order) {
            return Err(Error::Config(format!(
                "order {k} outside 1..={} (raise max_order up to {ORDER_CEILING})",
                self.max_order
            )));
        }
        if self.weights.is_empty() || self.families.is_empty() || self.n_ladder.is_empty() {
            return Err(Error::Config("weights, families and n_ladder must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(n) = self.n_ladder.iter().chain([&self.verify_n]).find(|&&n| n < 2) {
            return Err(Error::Config(format!("mesh size n = {n} below 2")));
        }
        for f in &self.families {
            f.validate()?;
        }
        self.refine.family.validate()?;
        if self.refine.initial_n < 2 {
            return Err(Error::Config("refine.initial_n must be at least 2".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::Config(format!("epsilon {e} must be positive")));
            }
        }
        for &k in &self.orders {
            for w in &self.weights {
                w.system(k, a, b)?;
            }
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        let [a, b] = self.interval;
        self.epsilon.unwrap_or((b - a) / 8.0)
    }

    /// Command-line value, then the environment, then the file.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_sections() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            seed = 9
            orders = [2, 4]
            weights = [{ preset = "constant" }, { preset = "exponential", rates = [0.1, 0.2, 0.3, 0.4] }]
            families = [{ family = "geometric", ratio = 1.5 }, { family = "uniform" }]
            n_ladder = [8, 16]
            trials = 3
            [tolerances]
            unity = 1e-7
            [output]
            prefix = "x"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.orders, vec![2, 4]);
        assert_eq!(cfg.families[0], MeshFamily::Geometric { ratio: 1.5 });
        assert_eq!(cfg.tolerances.unity, 1e-7);
        assert_eq!(cfg.tolerances.duality, 1e-6);
        assert_eq!(cfg.epsilon(), 0.125);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "trials = 0",
            "orders = [5]",
            "max_order = 7",
            "n_ladder = [1]",
            "families = [{ family = \"geometric\", ratio = -1.0 }]",
            "weights = [{ preset = \"exponential\", rates = [1.0] }]",
            "unknown_key = 1",
        ] {
            assert!(ExperimentConfig::from_toml_str(bad).is_err(), "{bad}");
        }
        assert!(ExperimentConfig::from_toml_str("max_order = 6\norders = [5]").is_ok());
    }
}
