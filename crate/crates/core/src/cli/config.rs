//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analysis::{log_spaced, TailEstimatorRegistry};
use crate::eigensolve::SolverRegistry;
use crate::potential::{BaseSet, DistributionRegistry, ScaleDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogSpacedEnergies {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Either an explicit list or `{"min", "max", "count"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergySpec {
    List(Vec<f64>),
    LogSpaced(LogSpacedEnergies),
}

impl EnergySpec {
    pub fn resolve(&self) -> Vec<f64> {
        match self {
            EnergySpec::List(v) => v.clone(),
            EnergySpec::LogSpaced(s) => log_spaced(s.min, s.max, s.count),
        }
    }
}

fn default_distribution() -> String {
    "uniform01".into()
}
fn default_samples() -> u64 {
    1
}
fn default_tolerance() -> f64 {
    1e-10
}
fn default_solver() -> String {
    "auto".into()
}
fn default_maxiter() -> usize {
    5000
}
fn default_num_eigenvalues() -> usize {
    4
}
fn default_true() -> bool {
    true
}
fn default_estimator() -> String {
    "loglog".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(rename = "L", default)]
    pub l: Option<usize>,
    #[serde(rename = "L_list", default)]
    pub l_list: Option<Vec<usize>>,
    #[serde(default)]
    pub n: Option<usize>,
    /// Mask file, relative to the config file's directory.
    #[serde(default)]
    pub baseset: Option<String>,
    #[serde(default = "default_distribution")]
    pub distribution: String,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub energies: Option<EnergySpec>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_maxiter")]
    pub maxiter: usize,
    #[serde(default = "default_num_eigenvalues")]
    pub num_eigenvalues: usize,
    /// `spectrum`: also run the lower-bound chain on every sample.
    #[serde(default)]
    pub verify_thirring: bool,
    /// `ids`: check `E_1 >= gamma S / 2` on every sample.
    #[serde(default = "default_true")]
    pub verify_chain: bool,
    /// `tailfit`: read this IDS CSV instead of simulating.
    #[serde(default)]
    pub ids_csv: Option<String>,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub e0: f64,
    #[serde(default = "default_estimator")]
    pub tail_estimator: String,
}

fn field_error(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {message}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Defaults filled in, energies expanded, output location dropped.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.energies = self.energies.as_ref().map(|e| EnergySpec::List(e.resolve()));
        out.output = None;
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dimension == 0 {
            return Err(field_error("dimension", "must be at least 1"));
        }
        if self.l == Some(0) {
            return Err(field_error("L", "must be at least 1"));
        }
        if let Some(list) = &self.l_list {
            if list.is_empty() || list.contains(&0) {
                return Err(field_error("L_list", "must be a non-empty list of positive integers"));
            }
        }
        if self.n == Some(0) {
            return Err(field_error("n", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(field_error("samples", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(field_error("tolerance", "must be positive"));
        }
        if self.num_eigenvalues == 0 {
            return Err(field_error("num_eigenvalues", "must be at least 1"));
        }
        if let Some(spec) = &self.energies {
            if let EnergySpec::LogSpaced(s) = spec {
                if !(s.min > 0.0 && s.max >= s.min) || s.count == 0 {
                    return Err(field_error("energies", "log-spaced range needs 0 < min <= max and count >= 1"));
                }
            }
            let energies = spec.resolve();
            if energies.iter().any(|e| !e.is_finite()) {
                return Err(field_error("energies", "must be finite"));
            }
            if energies.windows(2).any(|w| w[0] > w[1]) {
                return Err(field_error("energies", "must be ascending"));
            }
        }
        if let Some((low, high)) = self.window {
            if !(low < high) {
                return Err(field_error("window", "needs low < high"));
            }
        }
        self.distribution()?;
        SolverRegistry::builtin().get(&self.solver).map_err(|e| field_error("solver", e))?;
        TailEstimatorRegistry::builtin().get(&self.tail_estimator).map_err(|e| field_error("tail_estimator", e))?;
        Ok(())
    }

    pub fn distribution(&self) -> Result<ScaleDistribution, CliError> {
        DistributionRegistry::builtin().parse(&self.distribution).map_err(|e| field_error("distribution", e))
    }

    pub fn half_length(&self) -> Result<usize, CliError> {
        self.l.ok_or_else(|| field_error("L", "required for this command"))
    }

    pub fn half_lengths(&self) -> Result<Vec<usize>, CliError> {
        match (&self.l_list, self.l) {
            (Some(list), _) => Ok(list.clone()),
            (None, Some(l)) => Ok(vec![l]),
            (None, None) => Err(field_error("L_list", "required for this command (or give `L`)")),
        }
    }

    pub fn points_per_unit(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| field_error("n", "required for this command"))
    }

    pub fn energy_list(&self) -> Result<Vec<f64>, CliError> {
        let energies = self.energies.as_ref().map(EnergySpec::resolve).unwrap_or_default();
        if energies.is_empty() {
            return Err(field_error("energies", "required for this command"));
        }
        Ok(energies)
    }

    /// Loads the base set relative to `config_dir` and checks its dimension.
    pub fn load_baseset(&self, config_dir: &Path) -> Result<BaseSet, CliError> {
        let rel = self.baseset.as_ref().ok_or_else(|| field_error("baseset", "required for this command"))?;
        let base = BaseSet::load(config_dir.join(rel)).map_err(|e| field_error("baseset", e))?;
        if base.dimension() != self.dimension {
            return Err(field_error(
                "baseset",
                format!("mask is {}-dimensional but `dimension` is {}", base.dimension(), self.dimension),
            ));
        }
        Ok(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_rename() {
        let c = ExperimentConfig::parse(r#"{"dimension": 1, "L": 2, "n": 4}"#).unwrap();
        assert_eq!(c.l, Some(2));
        assert_eq!(c.samples, 1);
        assert_eq!(c.solver, "auto");
        assert!(c.verify_chain && !c.verify_thirring);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::parse(r#"{"dimension": 1, "samplez": 3}"#).unwrap_err();
        assert!(err.to_string().contains("samplez"), "{err}");
    }

    #[test]
    fn energy_forms() {
        let c = ExperimentConfig::parse(r#"{"dimension": 1, "energies": [0.1, 0.2]}"#).unwrap();
        assert_eq!(c.energy_list().unwrap(), [0.1, 0.2]);
        let c = ExperimentConfig::parse(r#"{"dimension": 1, "energies": {"min": 0.01, "max": 1.0, "count": 3}}"#).unwrap();
        let e = c.energy_list().unwrap();
        assert_eq!(e.len(), 3);
        assert!((e[1] - 0.1).abs() < 1e-15);
        assert_eq!(c.resolved().energies, Some(EnergySpec::List(e)));
    }

    #[test]
    fn field_level_messages() {
        let bad = [
            (r#"{"dimension": 0}"#, "dimension"),
            (r#"{"dimension": 1, "samples": 0}"#, "samples"),
            (r#"{"dimension": 1, "energies": [0.3, 0.1]}"#, "energies"),
            (r#"{"dimension": 1, "distribution": "gamma(2)"}"#, "distribution"),
            (r#"{"dimension": 1, "solver": "arpack"}"#, "solver"),
            (r#"{"dimension": 1, "tolerance": -1}"#, "tolerance"),
            (r#"{"dimension": 1, "L_list": []}"#, "L_list"),
        ];
        for (text, field) in bad {
            let err = ExperimentConfig::parse(text).unwrap().validate().unwrap_err();
            assert!(err.to_string().contains(&format!("`{field}`")), "{err}");
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn resolved_round_trips() {
        let c = ExperimentConfig::parse(r#"{"dimension": 2, "L_list": [1, 2], "output": "x"}"#).unwrap();
        let r = c.resolved();
        assert_eq!(r.output, None);
        assert_eq!(ExperimentConfig::parse(&r.to_json()).unwrap(), r);
    }
}
