//! Run configuration: human-editable TOML, schema-validated with explicit
//! versioning.

use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Basic,
    Proposal,
    Adaptive,
    AbcRej,
    Oracle,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algorithm::Basic => "basic",
            Algorithm::Proposal => "proposal",
            Algorithm::Adaptive => "adaptive",
            Algorithm::AbcRej => "abc-rej",
            Algorithm::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

/// Where the observed data vector comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ObservedSource {
    /// Simulate once from the model truth with a dedicated data seed.
    Simulate { data_seed: u64 },
    /// Fixed values inline.
    Values { values: Vec<f64> },
    /// Load a JSON array from a file (relative paths resolve against the
    /// config file location).
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalConfig {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: String,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub seed: u64,
    /// Bundle directory name; defaults to "<model>-<algorithm>".
    #[serde(default)]
    pub output: Option<String>,

    /// Samples per batch / iteration.
    #[serde(default)]
    pub m: Option<usize>,
    /// Tempering iterations T (adaptive).
    #[serde(default)]
    pub iterations: Option<usize>,
    /// Selection fraction omega (adaptive).
    #[serde(default)]
    pub omega: Option<f64>,
    /// "paper" for sigma_t = 0.1 (T-t)/T; explicit values via `sigmas`.
    #[serde(default)]
    pub schedule: Option<String>,
    #[serde(default)]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default)]
    pub accumulate: Option<bool>,
    #[serde(default)]
    pub standardize: Option<bool>,

    /// Cut-off distance (basic / proposal / abc-rej).
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub max_attempts: Option<usize>,
    #[serde(default)]
    pub target_accepted: Option<usize>,

    /// Oracle threshold and budget.
    #[serde(default)]
    pub epsilon_ref: Option<f64>,
    #[serde(default)]
    pub n_draws: Option<usize>,

    pub observed: ObservedSource,
    #[serde(default)]
    pub proposal: Option<ProposalConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION}); migrate the config",
                self.schema_version
            )));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials: must be >= 1".into()));
        }
        let need = |field: &str, present: bool| -> Result<(), CliError> {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{field}: required for algorithm `{}`",
                    self.algorithm
                )))
            }
        };
        match self.algorithm {
            Algorithm::Basic => {
                need("m", self.m.is_some())?;
                need("epsilon", self.epsilon.is_some())?;
            }
            Algorithm::Proposal => {
                need("m", self.m.is_some())?;
                need("epsilon", self.epsilon.is_some())?;
                need("proposal", self.proposal.is_some())?;
            }
            Algorithm::Adaptive => {
                need("m", self.m.is_some())?;
                need("iterations", self.iterations.is_some())?;
                need("omega", self.omega.is_some())?;
            }
            Algorithm::AbcRej => {
                need("epsilon", self.epsilon.is_some())?;
                need("max_attempts", self.max_attempts.is_some())?;
                need("target_accepted", self.target_accepted.is_some())?;
            }
            Algorithm::Oracle => {
                need("epsilon_ref", self.epsilon_ref.is_some())?;
                need("n_draws", self.n_draws.is_some())?;
            }
        }
        if let Some(m) = self.m {
            if m == 0 {
                return Err(CliError::Config("m: must be >= 1".into()));
            }
        }
        if let Some(t) = self.iterations {
            if t == 0 {
                return Err(CliError::Config("iterations: must be >= 1".into()));
            }
        }
        if let Some(omega) = self.omega {
            if !(omega > 0.0 && omega <= 1.0) {
                return Err(CliError::Config("omega: must lie in (0, 1]".into()));
            }
        }
        if let (Some(_), Some(_)) = (&self.schedule, &self.sigmas) {
            return Err(CliError::Config("schedule and sigmas are mutually exclusive".into()));
        }
        if let Some(s) = &self.schedule {
            if s != "paper" {
                return Err(CliError::Config(format!(
                    "schedule: unknown preset `{s}` (only \"paper\")"
                )));
            }
        }
        if let Some(p) = &self.proposal {
            if p.means.len() != p.stds.len() || p.means.is_empty() {
                return Err(CliError::Config(
                    "proposal: means and stds must be equal-length and non-empty".into(),
                ));
            }
            if p.stds.iter().any(|s| !(*s > 0.0)) {
                return Err(CliError::Config("proposal.stds: must be positive".into()));
            }
        }
        if let ObservedSource::Values { values } = &self.observed {
            if values.is_empty() {
                return Err(CliError::Config("observed.values: must be non-empty".into()));
            }
        }
        Ok(())
    }

    pub fn bundle_name(&self) -> String {
        self.output
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.model, self.algorithm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_toml() -> String {
        r#"
            schema_version = 1
            model = "toy1d"
            algorithm = "adaptive"
            trials = 2
            seed = 42
            m = 5
            iterations = 3
            omega = 1.0

            [observed]
            source = "values"
            values = [0.869]
        "#
        .to_string()
    }

    #[test]
    fn parses_and_validates() {
        let cfg: RunConfig = toml::from_str(&base_toml()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.bundle_name(), "toy1d-adaptive");
    }

    #[test]
    fn schema_version_mismatch_is_explicit() {
        let text = base_toml().replace("schema_version = 1", "schema_version = 9");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("schema_version"), "{err}");
        assert!(err.contains("migrate"), "{err}");
    }

    #[test]
    fn missing_algorithm_fields_are_named() {
        let text = base_toml().replace("omega = 1.0", "");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("omega"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = base_toml().replace("seed = 42", "seed = 42\nbogus_field = 3");
        assert!(toml::from_str::<RunConfig>(&text).is_err());
    }
}
