//! Experiment execution: repeated seeded trials over a registered model.

use crate::bundle::{
    aggregate_rows, write_aggregate_csv, BundlePaths, FailedTrial, Manifest, Timings, TrialResult,
    TrialTiming,
};
use crate::config::{Algorithm, ObservedSource, RunConfig};
use crate::CliError;
use igpr::inference::{
    adaptive_igpr, basic_igpr, proposal_igpr, IgprOptions, RunRecord, TemperingSchedule,
};
use igpr::models::SimulationModel;
use igpr::seed::{self, tag};
use igpr::{abc, IndependentGaussian, PriorSpec};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct RunOutcome {
    pub bundle_dir: PathBuf,
    pub manifest: Manifest,
}

/// Resolves the observed data vector for a model.
fn resolve_observed(
    config: &RunConfig,
    config_dir: &Path,
    model: &dyn SimulationModel,
) -> Result<Vec<f64>, CliError> {
    let observed = match &config.observed {
        ObservedSource::Simulate { data_seed } => model
            .simulate(&model.truth(), seed::derive(*data_seed, &[tag::DATA]))
            .map_err(|e| CliError::Model(e.to_string()))?,
        ObservedSource::Values { values } => values.clone(),
        ObservedSource::File { path } => {
            let full = if Path::new(path).is_absolute() {
                PathBuf::from(path)
            } else {
                config_dir.join(path)
            };
            let text = std::fs::read_to_string(&full)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", full.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Io(format!("{}: {e}", full.display())))?
        }
    };
    if observed.len() != model.n_data() {
        return Err(CliError::Config(format!(
            "observed: expected {} values for model `{}`, got {}",
            model.n_data(),
            model.name(),
            observed.len()
        )));
    }
    Ok(observed)
}

fn igpr_options(config: &RunConfig) -> IgprOptions {
    IgprOptions {
        standardize: config.standardize.unwrap_or(false),
        accumulate: config.accumulate.unwrap_or(false),
        ..IgprOptions::default()
    }
}

fn schedule_for(config: &RunConfig) -> Result<TemperingSchedule, CliError> {
    let t = config.iterations.expect("validated");
    match &config.sigmas {
        Some(sigmas) => TemperingSchedule::from_sigmas(sigmas.clone())
            .map_err(|e| CliError::Config(e.to_string())),
        None => TemperingSchedule::paper_default(t).map_err(|e| CliError::Config(e.to_string())),
    }
}

struct TrialRun {
    result: TrialResult,
    trace: Option<RunRecord>,
    seconds: f64,
}

fn run_trial(
    config: &RunConfig,
    model: &dyn SimulationModel,
    prior: &PriorSpec,
    observed: &[f64],
    trial: usize,
) -> Result<TrialRun, CliError> {
    let trial_seed = seed::derive(config.seed, &[tag::TRIAL, trial as u64]);
    let truth = model.truth();
    let opts = igpr_options(config);
    let started = Instant::now();

    let (posterior_moments, total_simulations, combine_fb, nearest_fb, retries, trace) =
        match config.algorithm {
            Algorithm::Basic => {
                let out = basic_igpr(
                    model,
                    prior,
                    observed,
                    config.m.expect("validated"),
                    config.epsilon.expect("validated"),
                    trial_seed,
                    &opts,
                )
                .map_err(to_cli_error)?;
                let moments: Vec<(f64, f64)> = (0..out.psi.dim())
                    .map(|j| (out.psi.mean(j), out.psi.std(j)))
                    .collect();
                (moments, out.simulations, 0, out.nearest_fallback as usize, 0, None)
            }
            Algorithm::Proposal => {
                let p = config.proposal.as_ref().expect("validated");
                let q = IndependentGaussian::new(p.means.clone(), p.stds.clone())
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let out = proposal_igpr(
                    model,
                    prior,
                    &q,
                    observed,
                    config.m.expect("validated"),
                    config.epsilon.expect("validated"),
                    trial_seed,
                    &opts,
                )
                .map_err(to_cli_error)?;
                let moments = out.posterior.posterior_moments().map_err(to_cli_error)?;
                (
                    moments,
                    out.simulations,
                    out.combine_fallback.iter().filter(|&&f| f).count(),
                    out.nearest_fallback as usize,
                    0,
                    None,
                )
            }
            Algorithm::Adaptive => {
                let schedule = schedule_for(config)?;
                let m = config.m.expect("validated");
                let out = adaptive_igpr(
                    model,
                    prior,
                    observed,
                    m,
                    &schedule,
                    config.omega.expect("validated"),
                    trial_seed,
                    &opts,
                )
                .map_err(to_cli_error)?;
                let moments = out.posterior.posterior_moments().map_err(to_cli_error)?;
                let combine_fb = out
                    .record
                    .iterations
                    .iter()
                    .map(|it| it.combine_fallback.iter().filter(|&&f| f).count())
                    .sum();
                let nearest_fb =
                    out.record.iterations.iter().filter(|it| it.nearest_fallback).count();
                let retries: usize = out.record.iterations.iter().map(|it| it.retries).sum();
                (moments, schedule.len() * m, combine_fb, nearest_fb, retries, Some(out.record))
            }
            Algorithm::AbcRej => {
                let run = abc::abc_rej(
                    model,
                    prior,
                    observed,
                    config.epsilon.expect("validated"),
                    config.max_attempts.expect("validated"),
                    config.target_accepted.expect("validated"),
                    trial_seed,
                )
                .map_err(to_cli_error)?;
                if run.exhausted {
                    return Err(CliError::Numerical(format!(
                        "abc-rej accepted nothing in {} attempts; widen epsilon",
                        run.attempts
                    )));
                }
                let dim = run.accepted[0].len();
                let n = run.accepted.len() as f64;
                let moments: Vec<(f64, f64)> = (0..dim)
                    .map(|j| {
                        let mean = run.accepted.iter().map(|t| t[j]).sum::<f64>() / n;
                        let var = run
                            .accepted
                            .iter()
                            .map(|t| (t[j] - mean) * (t[j] - mean))
                            .sum::<f64>()
                            / n;
                        (mean, var.sqrt())
                    })
                    .collect();
                (moments, run.attempts, 0, 0, 0, None)
            }
            Algorithm::Oracle => {
                return Err(CliError::Config(
                    "oracle runs go through `igpr oracle <config>`".into(),
                ))
            }
        };

    let abs_errors: Vec<f64> = posterior_moments
        .iter()
        .zip(&truth)
        .map(|((mean, _), t)| (mean - t).abs())
        .collect();
    Ok(TrialRun {
        result: TrialResult {
            trial,
            seed: trial_seed,
            posterior_means: posterior_moments.iter().map(|m| m.0).collect(),
            posterior_stds: posterior_moments.iter().map(|m| m.1).collect(),
            abs_errors,
            total_simulations,
            combine_fallback_count: combine_fb,
            nearest_fallback_count: nearest_fb,
            retries,
        },
        trace,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn to_cli_error(e: igpr::Error) -> CliError {
    match e {
        igpr::Error::InvalidArgument(m) => CliError::Config(m),
        igpr::Error::UnknownModel(m) => CliError::Model(format!("unknown model `{m}`")),
        igpr::Error::Simulation { model, reason } => {
            CliError::Model(format!("simulation failure in `{model}`: {reason}"))
        }
        igpr::Error::Numerical(m) => CliError::Numerical(m),
        igpr::Error::InsufficientAcceptances { got, need } => {
            CliError::Numerical(format!("insufficient acceptances: {got} < {need}"))
        }
        igpr::Error::Io(e) => CliError::Io(e.to_string()),
        igpr::Error::Serde(e) => CliError::Io(e.to_string()),
    }
}

/// Runs every trial of the config and writes the bundle. Returns the bundle
/// location and manifest.
pub fn run_experiment(
    config: &RunConfig,
    config_dir: &Path,
    output_root: &Path,
) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let model = igpr::models::build(&config.model)
        .map_err(|e| CliError::Model(e.to_string()))?;
    let prior = model.prior();
    let observed = resolve_observed(config, config_dir, model.as_ref())?;

    if config.algorithm == Algorithm::Oracle {
        return run_oracle(config, model.as_ref(), &prior, &observed, output_root);
    }

    let started = Instant::now();
    let outcomes: Vec<(usize, Result<TrialRun, CliError>)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| (trial, run_trial(config, model.as_ref(), &prior, &observed, trial)))
        .collect();

    let mut trials = Vec::new();
    let mut traces = Vec::new();
    let mut timings = Vec::new();
    let mut failed = Vec::new();
    for (trial, outcome) in outcomes {
        match outcome {
            Ok(run) => {
                timings.push(TrialTiming { trial, seconds: run.seconds });
                if let Some(trace) = run.trace {
                    traces.push((trial, trace));
                }
                trials.push(run.result);
            }
            Err(e) => failed.push(FailedTrial { trial, error: e.to_string() }),
        }
    }
    if trials.is_empty() {
        return Err(CliError::Numerical(format!(
            "all {} trials failed; first error: {}",
            config.trials,
            failed.first().map(|f| f.error.clone()).unwrap_or_default()
        )));
    }

    let manifest = Manifest {
        schema_version: config.schema_version,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        model_config: model.config(),
        theta_names: model.theta_names().iter().map(|s| s.to_string()).collect(),
        truth: model.truth(),
        observed,
        trial_seeds: (0..config.trials)
            .map(|t| seed::derive(config.seed, &[tag::TRIAL, t as u64]))
            .collect(),
        failed_trials: failed,
        aggregate_valid: trials.len() * 5 >= config.trials * 4,
    };

    let paths = BundlePaths::new(output_root.join(config.bundle_name()));
    write_bundle(&paths, &manifest, &trials, &traces, &timings, started.elapsed().as_secs_f64())?;
    Ok(RunOutcome { bundle_dir: paths.root.clone(), manifest })
}

fn run_oracle(
    config: &RunConfig,
    model: &dyn SimulationModel,
    prior: &PriorSpec,
    observed: &[f64],
    output_root: &Path,
) -> Result<RunOutcome, CliError> {
    let paths = BundlePaths::new(output_root.join(config.bundle_name()));
    std::fs::create_dir_all(paths.oracle_dir()).map_err(|e| CliError::Io(e.to_string()))?;
    let estimate = abc::oracle_posterior_mean_cached(
        &paths.oracle_dir(),
        model,
        prior,
        observed,
        config.epsilon_ref.expect("validated"),
        config.n_draws.expect("validated"),
        config.seed,
    )
    .map_err(to_cli_error)?;

    let manifest = Manifest {
        schema_version: config.schema_version,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        model_config: model.config(),
        theta_names: model.theta_names().iter().map(|s| s.to_string()).collect(),
        truth: model.truth(),
        observed: observed.to_vec(),
        trial_seeds: vec![config.seed],
        failed_trials: vec![],
        aggregate_valid: true,
    };
    std::fs::write(
        paths.manifest(),
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?,
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "oracle: accepted {} of {} attempts at epsilon_ref {}",
        estimate.accepted, estimate.attempts, estimate.epsilon_ref
    );
    for (j, (mean, se)) in estimate.means.iter().zip(&estimate.standard_errors).enumerate() {
        println!("  theta_{j}: mean {mean:.6} (se {se:.2e})");
    }
    Ok(RunOutcome { bundle_dir: paths.root.clone(), manifest })
}

fn write_bundle(
    paths: &BundlePaths,
    manifest: &Manifest,
    trials: &[TrialResult],
    traces: &[(usize, RunRecord)],
    timings: &[TrialTiming],
    total_seconds: f64,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    std::fs::create_dir_all(paths.root.join("trials")).map_err(io)?;
    if !traces.is_empty() {
        std::fs::create_dir_all(paths.root.join("traces")).map_err(io)?;
    }
    std::fs::write(
        paths.manifest(),
        serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?,
    )
    .map_err(io)?;
    for t in trials {
        std::fs::write(
            paths.trial(t.trial),
            serde_json::to_string_pretty(t).map_err(|e| CliError::Io(e.to_string()))?,
        )
        .map_err(io)?;
    }
    for (trial, trace) in traces {
        std::fs::write(
            paths.trace(*trial),
            trace.to_jsonl().map_err(|e| CliError::Io(e.to_string()))?,
        )
        .map_err(io)?;
    }
    let rows = aggregate_rows(&manifest.theta_names, trials);
    write_aggregate_csv(&paths.aggregate(), &rows)?;
    std::fs::write(
        paths.timings(),
        serde_json::to_string_pretty(&Timings {
            trial_seconds: timings.to_vec(),
            total_seconds,
        })
        .map_err(|e| CliError::Io(e.to_string()))?,
    )
    .map_err(io)?;
    Ok(())
}
