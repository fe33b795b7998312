//! On-disk result bundle.
//!
//! Layout under the bundle directory:
//!
//! ```text
//! manifest.json      config, versions, seeds, observed data, validity
//! trials/trial-NNN.json
//! traces/trial-NNN.jsonl   (adaptive runs)
//! aggregate.csv      per-dimension error table
//! timings.json       wall-clock times; the one non-deterministic file
//! oracle/            cached oracle estimates (oracle runs)
//! ```
//!
//! Everything except `timings.json` (and the `elapsed_s` fields inside
//! traces) is a pure function of the config, so repeated runs produce
//! byte-identical bundles up to those timing values.

use crate::config::RunConfig;
use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub crate_version: String,
    pub config: RunConfig,
    pub model_config: serde_json::Value,
    pub theta_names: Vec<String>,
    pub truth: Vec<f64>,
    pub observed: Vec<f64>,
    /// Seeds actually used per trial, derived from the root seed.
    pub trial_seeds: Vec<u64>,
    pub failed_trials: Vec<FailedTrial>,
    /// True when at least 80% of trials succeeded.
    pub aggregate_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedTrial {
    pub trial: usize,
    pub error: String,
}

/// One trial's deterministic results. Wall time lives in `timings.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub posterior_means: Vec<f64>,
    pub posterior_stds: Vec<f64>,
    /// |posterior mean - truth| per dimension.
    pub abs_errors: Vec<f64>,
    pub total_simulations: usize,
    pub combine_fallback_count: usize,
    pub nearest_fallback_count: usize,
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub trial_seconds: Vec<TrialTiming>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub trial: usize,
    pub seconds: f64,
}

/// Per-dimension aggregate of the absolute errors across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub parameter: String,
    pub mean_error: f64,
    /// Sample std (denominator n-1); None for a single trial.
    pub std_error: Option<f64>,
    pub median_error: f64,
    pub n_trials: usize,
}

pub fn aggregate_rows(theta_names: &[String], trials: &[TrialResult]) -> Vec<AggregateRow> {
    let n = trials.len();
    theta_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut errs: Vec<f64> = trials.iter().map(|t| t.abs_errors[j]).collect();
            let mean = errs.iter().sum::<f64>() / n as f64;
            let std = if n >= 2 {
                Some(
                    (errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64)
                        .sqrt(),
                )
            } else {
                None
            };
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = if n % 2 == 1 {
                errs[n / 2]
            } else {
                0.5 * (errs[n / 2 - 1] + errs[n / 2])
            };
            AggregateRow { parameter: name.clone(), mean_error: mean, std_error: std, median_error: median, n_trials: n }
        })
        .collect()
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<(), CliError> {
    let mut out = String::from("parameter,mean_error,std_error,median_error,n_trials\n");
    for r in rows {
        let std = r.std_error.map(|s| format!("{s:.12e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.12e},{},{:.12e},{}\n",
            r.parameter, r.mean_error, std, r.median_error, r.n_trials
        ));
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(e.to_string()))
}

pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>, CliError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(CliError::Io(format!("aggregate row {i}: expected 5 fields")));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|e| CliError::Io(format!("aggregate row {i}: {e}")))
        };
        rows.push(AggregateRow {
            parameter: parts[0].to_string(),
            mean_error: parse(parts[1])?,
            std_error: if parts[2].is_empty() { None } else { Some(parse(parts[2])?) },
            median_error: parse(parts[3])?,
            n_trials: parts[4]
                .parse()
                .map_err(|e| CliError::Io(format!("aggregate row {i}: {e}")))?,
        });
    }
    Ok(rows)
}

pub struct BundlePaths {
    pub root: PathBuf,
}

impl BundlePaths {
    pub fn new(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn aggregate(&self) -> PathBuf {
        self.root.join(AGGREGATE_FILE)
    }

    pub fn timings(&self) -> PathBuf {
        self.root.join(TIMINGS_FILE)
    }

    pub fn trial(&self, idx: usize) -> PathBuf {
        self.root.join("trials").join(format!("trial-{idx:03}.json"))
    }

    pub fn trace(&self, idx: usize) -> PathBuf {
        self.root.join("traces").join(format!("trial-{idx:03}.jsonl"))
    }

    pub fn oracle_dir(&self) -> PathBuf {
        self.root.join("oracle")
    }
}

pub fn read_manifest(bundle: &Path) -> Result<Manifest, CliError> {
    let path = bundle.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if manifest.schema_version != crate::config::SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "bundle schema_version {} does not match tool version {}; migrate the bundle",
            manifest.schema_version,
            crate::config::SCHEMA_VERSION
        )));
    }
    Ok(manifest)
}

pub fn read_trials(bundle: &Path, manifest: &Manifest) -> Result<Vec<TrialResult>, CliError> {
    let paths = BundlePaths::new(bundle.to_path_buf());
    let mut trials = Vec::new();
    for idx in 0..manifest.config.trials {
        if manifest.failed_trials.iter().any(|f| f.trial == idx) {
            continue;
        }
        let path = paths.trial(idx);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        trials.push(
            serde_json::from_str(&text)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        );
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(idx: usize, errs: &[f64]) -> TrialResult {
        TrialResult {
            trial: idx,
            seed: idx as u64,
            posterior_means: errs.to_vec(),
            posterior_stds: vec![0.1; errs.len()],
            abs_errors: errs.to_vec(),
            total_simulations: 10,
            combine_fallback_count: 0,
            nearest_fallback_count: 0,
            retries: 0,
        }
    }

    #[test]
    fn aggregate_mean_std_median() {
        let names = vec!["a".to_string()];
        let trials = vec![trial(0, &[1.0]), trial(1, &[2.0]), trial(2, &[6.0])];
        let rows = aggregate_rows(&names, &trials);
        assert!((rows[0].mean_error - 3.0).abs() < 1e-12);
        assert!((rows[0].median_error - 2.0).abs() < 1e-12);
        let expected_std = ((4.0 + 1.0 + 9.0) / 2.0_f64).sqrt();
        assert!((rows[0].std_error.unwrap() - expected_std).abs() < 1e-12);
    }

    #[test]
    fn single_trial_std_is_empty_marked() {
        let names = vec!["a".to_string()];
        let rows = aggregate_rows(&names, &[trial(0, &[1.0])]);
        assert!(rows[0].std_error.is_none());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agg.csv");
        write_aggregate_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.contains(",,"), "std column should be empty: {line}");
        let parsed = parse_aggregate_csv(&text).unwrap();
        assert_eq!(parsed.len(), 1);
        assert!(parsed[0].std_error.is_none());
    }

    #[test]
    fn csv_round_trip() {
        let names = vec!["a".to_string(), "b".to_string()];
        let trials = vec![trial(0, &[1.0, 0.5]), trial(1, &[2.0, 0.25])];
        let rows = aggregate_rows(&names, &trials);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agg.csv");
        write_aggregate_csv(&path, &rows).unwrap();
        let parsed = parse_aggregate_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for (a, b) in rows.iter().zip(&parsed) {
            assert_eq!(a.parameter, b.parameter);
            assert!((a.mean_error - b.mean_error).abs() < 1e-15);
            assert!((a.median_error - b.median_error).abs() < 1e-15);
        }
    }
}
