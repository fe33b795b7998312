//! Report generation: error tables and plot-ready series derived purely from
//! stored bundles.

use crate::bundle::{aggregate_rows, read_manifest, read_trials, BundlePaths, Timings};
use crate::CliError;
use igpr::inference::RunRecord;
use std::path::Path;

pub struct ReportFiles {
    pub error_table: String,
    pub error_vs_iteration: Option<String>,
    pub time_vs_samples: String,
}

/// Builds the report content for one or more bundles. The error table and
/// iteration series come from the first bundle; the time-vs-samples series
/// has one row per bundle.
pub fn build_report(bundles: &[&Path]) -> Result<ReportFiles, CliError> {
    if bundles.is_empty() {
        return Err(CliError::Config("report needs at least one bundle".into()));
    }
    let first = read_manifest(bundles[0])?;
    let trials = read_trials(bundles[0], &first)?;
    if trials.is_empty() {
        return Err(CliError::Config("bundle holds no successful trials".into()));
    }

    let rows = aggregate_rows(&first.theta_names, &trials);
    let mut error_table = String::from("parameter,mean_error,std_error,median_error,n_trials\n");
    for r in &rows {
        let std = r.std_error.map(|s| format!("{s:.12e}")).unwrap_or_default();
        error_table.push_str(&format!(
            "{},{:.12e},{},{:.12e},{}\n",
            r.parameter, r.mean_error, std, r.median_error, r.n_trials
        ));
    }

    let error_vs_iteration = error_series(bundles[0], &first)?;

    let mut time_vs_samples =
        String::from("bundle,model,algorithm,m,iterations,total_samples,mean_trial_seconds\n");
    for path in bundles {
        let manifest = read_manifest(path)?;
        let timings: Timings = {
            let p = BundlePaths::new(path.to_path_buf()).timings();
            let text = std::fs::read_to_string(&p)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Io(e.to_string()))?
        };
        let mean_seconds = if timings.trial_seconds.is_empty() {
            0.0
        } else {
            timings.trial_seconds.iter().map(|t| t.seconds).sum::<f64>()
                / timings.trial_seconds.len() as f64
        };
        let m = manifest.config.m.unwrap_or(0);
        let iters = manifest.config.iterations.unwrap_or(1);
        time_vs_samples.push_str(&format!(
            "{},{},{},{},{},{},{:.6}\n",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("bundle"),
            manifest.config.model,
            manifest.config.algorithm,
            m,
            iters,
            m * iters,
            mean_seconds
        ));
    }

    Ok(ReportFiles { error_table, error_vs_iteration, time_vs_samples })
}

/// Per-parameter mean absolute error of the tempered mean against the truth,
/// per iteration, averaged over trials. None when the bundle has no traces.
fn error_series(
    bundle: &Path,
    manifest: &crate::bundle::Manifest,
) -> Result<Option<String>, CliError> {
    let paths = BundlePaths::new(bundle.to_path_buf());
    let mut traces = Vec::new();
    for idx in 0..manifest.config.trials {
        let path = paths.trace(idx);
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        traces.push(RunRecord::from_jsonl(&text).map_err(|e| CliError::Io(e.to_string()))?);
    }
    if traces.is_empty() {
        return Ok(None);
    }
    let t_max = traces.iter().map(|tr| tr.iterations.len()).min().unwrap_or(0);
    let mut out = String::from("t,parameter,mean_abs_error\n");
    for t in 0..t_max {
        for (j, name) in manifest.theta_names.iter().enumerate() {
            let mean_err = traces
                .iter()
                .map(|tr| (tr.iterations[t].phi_means[j] - manifest.truth[j]).abs())
                .sum::<f64>()
                / traces.len() as f64;
            out.push_str(&format!("{},{},{:.12e}\n", t + 1, name, mean_err));
        }
    }
    Ok(Some(out))
}

/// Writes the report files under `out_dir`.
pub fn write_report(bundles: &[&Path], out_dir: &Path) -> Result<(), CliError> {
    let report = build_report(bundles)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(out_dir.join("error_table.csv"), &report.error_table)
        .map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(series) = &report.error_vs_iteration {
        std::fs::write(out_dir.join("error_vs_iteration.csv"), series)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    std::fs::write(out_dir.join("time_vs_samples.csv"), &report.time_vs_samples)
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}
