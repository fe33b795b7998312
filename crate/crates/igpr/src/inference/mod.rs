//! The inverse-regression inference algorithms.
//!
//! All three variants share one skeleton: draw parameters from some sampling
//! distribution, push them through the simulator, keep the samples whose data
//! landed near the observation, and regress each parameter component on the
//! data with a GP evaluated at the observed point. The variants differ in
//! where the draws come from and how the resulting Gaussian product is
//! corrected:
//!
//! * [`basic_igpr`] draws from the prior and returns the raw GP product psi.
//! * [`proposal_igpr`] draws from a proposal q and corrects the product via
//!   the per-dimension precision algebra of [`combine_with_proposal`].
//! * [`adaptive_igpr`] runs a tempered loop: each iteration's corrected
//!   product becomes the next iteration's proposal, while artificial data
//!   noise of decreasing scale keeps early iterations from over-committing.
//!
//! Determinism: every random draw flows from the root seed through indexed
//! child streams, so results are bit-reproducible and independent of
//! scheduling. Per-draw simulations and per-dimension GP fits run in
//! parallel.

mod trace;

pub use trace::{IterationRecord, RunRecord};

use crate::dist::{IndependentGaussian, PriorSpec};
use crate::error::{Error, Result};
use crate::gp::{gp_fit, gp_predict, select_local, FitConfig, KernelFamily, TrainingSet};
use crate::models::SimulationModel;
use crate::seed::{self, tag};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Positivity floor for the combined precision of Eq.-style proposal
/// correction; at or below this the dimension falls back to the proposal.
pub const PRECISION_FLOOR: f64 = 1e-12;

/// Euclidean distance between two data vectors.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "distance dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Result of the proposal-correction algebra, with per-dimension fallback
/// flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedGaussian {
    pub gaussian: IndependentGaussian,
    pub fallback: Vec<bool>,
}

/// Combines the raw GP product `psi` with proposal `q` and Gaussianized
/// prior `phi0`, per dimension:
///
///   1/var_phi  = 1/var_psi - 1/var_q + 1/var_0
///   mean_phi   = (mean_psi/var_psi - mean_q/var_q + mean_0/var_0) * var_phi
///
/// If the combined precision is <= [`PRECISION_FLOOR`] the dimension keeps
/// the proposal's moments and is flagged. When q and phi0 coincide in a
/// dimension the correction cancels symbolically and psi passes through
/// exactly.
pub fn combine_with_proposal(
    psi: &IndependentGaussian,
    q: &IndependentGaussian,
    phi0: &IndependentGaussian,
) -> Result<CombinedGaussian> {
    let n = psi.dim();
    if q.dim() != n || phi0.dim() != n {
        return Err(Error::invalid("combine_with_proposal: dimension mismatch"));
    }
    let mut means = Vec::with_capacity(n);
    let mut stds = Vec::with_capacity(n);
    let mut fallback = vec![false; n];
    for j in 0..n {
        if q.mean(j) == phi0.mean(j) && q.std(j) == phi0.std(j) {
            means.push(psi.mean(j));
            stds.push(psi.std(j));
            continue;
        }
        let var_psi = psi.std(j) * psi.std(j);
        let var_q = q.std(j) * q.std(j);
        let var_0 = phi0.std(j) * phi0.std(j);
        let precision = 1.0 / var_psi - 1.0 / var_q + 1.0 / var_0;
        if !(precision > PRECISION_FLOOR) {
            fallback[j] = true;
            means.push(q.mean(j));
            stds.push(q.std(j));
            continue;
        }
        let variance = 1.0 / precision;
        let mean =
            (psi.mean(j) / var_psi - q.mean(j) / var_q + phi0.mean(j) / var_0) * variance;
        if !mean.is_finite() || !variance.is_finite() {
            fallback[j] = true;
            means.push(q.mean(j));
            stds.push(q.std(j));
            continue;
        }
        means.push(mean);
        stds.push(variance.sqrt());
    }
    Ok(CombinedGaussian { gaussian: IndependentGaussian::new(means, stds)?, fallback })
}

/// Decreasing artificial-noise levels sigma_1 >= ... >= sigma_T = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperingSchedule {
    sigmas: Vec<f64>,
}

impl TemperingSchedule {
    /// The reference schedule sigma_t = 0.1 (T - t) / T.
    pub fn paper_default(t_total: usize) -> Result<Self> {
        if t_total == 0 {
            return Err(Error::invalid("schedule needs T >= 1"));
        }
        let sigmas = (1..=t_total)
            .map(|t| 0.1 * (t_total - t) as f64 / t_total as f64)
            .collect();
        Self::from_sigmas(sigmas)
    }

    pub fn from_sigmas(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::invalid("schedule needs at least one sigma"));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("sigmas must be finite and >= 0"));
        }
        if sigmas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("sigmas must be non-increasing"));
        }
        if *sigmas.last().unwrap() != 0.0 {
            return Err(Error::invalid("the final sigma must be exactly 0"));
        }
        Ok(Self { sigmas })
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one entry
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }
}

/// The method's final output: an evaluable unnormalized density
/// phi(theta) * prior(theta) / phi0(theta) with per-dimension marginal
/// moment extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGaussianPosterior {
    pub phi: IndependentGaussian,
    pub phi0: IndependentGaussian,
    pub prior: PriorSpec,
}

impl WeightedGaussianPosterior {
    /// Unnormalized log density; negative infinity outside uniform-prior
    /// support.
    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.phi.dim() {
            return Err(Error::invalid("log_density dimension mismatch"));
        }
        Ok((0..theta.len()).map(|j| self.log_density_dim(j, theta[j])).sum())
    }

    fn log_density_dim(&self, j: usize, x: f64) -> f64 {
        self.phi.log_pdf_dim(j, x) + self.prior.log_pdf_dim(j, x) - self.phi0.log_pdf_dim(j, x)
    }

    /// Mean and standard deviation of the j-th marginal via deterministic
    /// trapezoid quadrature on a 4001-point grid over
    /// [mean - 10 std, mean + 10 std] intersected with the prior support.
    pub fn marginal_moments(&self, j: usize) -> Result<(f64, f64)> {
        const GRID: usize = 4001;
        if j >= self.phi.dim() {
            return Err(Error::invalid(format!("marginal_moments: dimension {j} out of range")));
        }
        let (mu, sd) = (self.phi.mean(j), self.phi.std(j));
        let (support_lo, support_hi) = self.prior.support(j);
        let mut lo = (mu - 10.0 * sd).max(support_lo);
        let mut hi = (mu + 10.0 * sd).min(support_hi);
        if !(lo < hi) {
            // phi sits entirely outside a bounded support; integrate over the
            // support itself so the truncated moments stay well defined.
            lo = support_lo;
            hi = support_hi;
        }
        let h = (hi - lo) / (GRID - 1) as f64;
        let xs: Vec<f64> = (0..GRID).map(|i| lo + h * i as f64).collect();
        let logf: Vec<f64> = xs.iter().map(|&x| self.log_density_dim(j, x)).collect();
        let max_log = logf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max_log.is_finite() {
            return Err(Error::numerical(
                "marginal quadrature: density vanishes on the whole grid".to_string(),
            ));
        }
        let mut mass = 0.0;
        let mut mean = 0.0;
        for (i, (&x, &lf)) in xs.iter().zip(&logf).enumerate() {
            let w = if i == 0 || i == GRID - 1 { 0.5 } else { 1.0 } * (lf - max_log).exp();
            mass += w;
            mean += w * x;
        }
        // total mass in log form: max_log + ln(h * mass)
        if max_log + (h * mass).ln() < 1e-300_f64.ln() {
            return Err(Error::numerical(
                "marginal quadrature mass below 1e-300; density lies outside the grid".to_string(),
            ));
        }
        mean /= mass;
        let mut var = 0.0;
        for (i, (&x, &lf)) in xs.iter().zip(&logf).enumerate() {
            let w = if i == 0 || i == GRID - 1 { 0.5 } else { 1.0 } * (lf - max_log).exp();
            var += w * (x - mean) * (x - mean);
        }
        var /= mass;
        Ok((mean, var.max(0.0).sqrt()))
    }

    /// Marginal (mean, std) for every dimension.
    pub fn posterior_moments(&self) -> Result<Vec<(f64, f64)>> {
        (0..self.phi.dim()).map(|j| self.marginal_moments(j)).collect()
    }
}

/// Tuning knobs shared by the three algorithms.
#[derive(Debug, Clone)]
pub struct IgprOptions {
    /// Divide every data coordinate by its pooled per-iteration sample std
    /// before distances and regression. Off by default (raw Euclidean).
    pub standardize: bool,
    /// Adaptive only: fit each iteration's GPs on all samples generated so
    /// far instead of only the current batch; the local cut-off is skipped.
    pub accumulate: bool,
    pub fit_restarts: usize,
    pub fit_max_iters: usize,
    pub fit_tol: f64,
    pub kernel: KernelFamily,
    pub ard: bool,
}

impl Default for IgprOptions {
    fn default() -> Self {
        Self {
            standardize: false,
            accumulate: false,
            fit_restarts: 3,
            fit_max_iters: 200,
            fit_tol: 1e-8,
            kernel: KernelFamily::SquaredExponential,
            ard: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasicOutcome {
    pub psi: IndependentGaussian,
    pub n_local: usize,
    pub nearest_fallback: bool,
    pub simulations: usize,
}

#[derive(Debug, Clone)]
pub struct ProposalOutcome {
    pub posterior: WeightedGaussianPosterior,
    pub psi: IndependentGaussian,
    pub combine_fallback: Vec<bool>,
    pub n_local: usize,
    pub nearest_fallback: bool,
    pub simulations: usize,
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub posterior: WeightedGaussianPosterior,
    pub record: RunRecord,
}

/// Draws m parameters from the prior, simulates each, selects the samples
/// within `epsilon` of the observation, and returns the per-dimension GP
/// product evaluated at the observation.
pub fn basic_igpr(
    model: &dyn SimulationModel,
    prior: &PriorSpec,
    observed: &[f64],
    m: usize,
    epsilon: f64,
    root_seed: u64,
    opts: &IgprOptions,
) -> Result<BasicOutcome> {
    validate_common(model, prior, observed, m)?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be > 0"));
    }
    let thetas: Vec<Vec<f64>> = (0..m)
        .map(|i| prior.sample(&mut seed::rng(root_seed, &[tag::DRAW, 1, i as u64, 0])))
        .collect();
    let data = simulate_batch(model, &thetas, root_seed, 1)?;

    let scales = data_scales(&data, opts.standardize);
    let scaled = scale_rows(&data, &scales);
    let query = scale_row(observed, &scales);

    let deltas: Vec<f64> =
        scaled.iter().map(|d| distance(d, &query)).collect::<Result<_>>()?;
    let (selected, nearest_fallback) = select_or_nearest(&deltas, epsilon, m.min(20));
    let prior_stds: Vec<f64> = prior.gaussian_moments().stds().to_vec();
    let psi = gp_marginals(
        &selected.iter().map(|&i| scaled[i].clone()).collect::<Vec<_>>(),
        &selected.iter().map(|&i| thetas[i].clone()).collect::<Vec<_>>(),
        &query,
        &prior_stds,
        None,
        root_seed,
        1,
        opts,
    )?;
    Ok(BasicOutcome { psi, n_local: selected.len(), nearest_fallback, simulations: m })
}

/// Like [`basic_igpr`] but draws from the proposal `q`, clips each GP std at
/// the prior std, and corrects the product back to the true prior.
pub fn proposal_igpr(
    model: &dyn SimulationModel,
    prior: &PriorSpec,
    q: &IndependentGaussian,
    observed: &[f64],
    m: usize,
    epsilon: f64,
    root_seed: u64,
    opts: &IgprOptions,
) -> Result<ProposalOutcome> {
    validate_common(model, prior, observed, m)?;
    if q.dim() != prior.dim() {
        return Err(Error::invalid("proposal dimension does not match the prior"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be > 0"));
    }
    let thetas: Vec<Vec<f64>> = (0..m)
        .map(|i| q.sample(&mut seed::rng(root_seed, &[tag::DRAW, 1, i as u64, 0])))
        .collect();
    let data = simulate_batch(model, &thetas, root_seed, 1)?;

    let scales = data_scales(&data, opts.standardize);
    let scaled = scale_rows(&data, &scales);
    let query = scale_row(observed, &scales);

    let deltas: Vec<f64> =
        scaled.iter().map(|d| distance(d, &query)).collect::<Result<_>>()?;
    let (selected, nearest_fallback) = select_or_nearest(&deltas, epsilon, m.min(20));
    let phi0 = prior.gaussian_moments();
    let prior_stds: Vec<f64> = phi0.stds().to_vec();
    let psi = gp_marginals(
        &selected.iter().map(|&i| scaled[i].clone()).collect::<Vec<_>>(),
        &selected.iter().map(|&i| thetas[i].clone()).collect::<Vec<_>>(),
        &query,
        &prior_stds,
        Some(&prior_stds),
        root_seed,
        1,
        opts,
    )?;
    let combined = combine_with_proposal(&psi, q, &phi0)?;
    Ok(ProposalOutcome {
        posterior: WeightedGaussianPosterior {
            phi: combined.gaussian,
            phi0,
            prior: prior.clone(),
        },
        psi,
        combine_fallback: combined.fallback,
        n_local: selected.len(),
        nearest_fallback,
        simulations: m,
    })
}

/// The tempered adaptive loop. Deterministic given `root_seed`; returns the
/// weighted-Gaussian posterior and a per-iteration trace.
pub fn adaptive_igpr(
    model: &dyn SimulationModel,
    prior: &PriorSpec,
    observed: &[f64],
    m: usize,
    schedule: &TemperingSchedule,
    omega: f64,
    root_seed: u64,
    opts: &IgprOptions,
) -> Result<AdaptiveOutcome> {
    validate_common(model, prior, observed, m)?;
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::invalid("omega must lie in (0, 1]"));
    }
    let phi0 = prior.gaussian_moments();
    let prior_stds: Vec<f64> = phi0.stds().to_vec();
    let mut proposal = phi0.clone();
    let mut record = RunRecord::default();
    let mut pool_data: Vec<Vec<f64>> = Vec::new();
    let mut pool_thetas: Vec<Vec<f64>> = Vec::new();
    let started = Instant::now();

    for (idx, &sigma) in schedule.sigmas().iter().enumerate() {
        let t = (idx + 1) as u64;
        let (thetas, data, retries) =
            draw_and_simulate(model, &proposal, m, sigma, root_seed, t)?;

        if opts.accumulate {
            pool_data.extend(data.iter().cloned());
            pool_thetas.extend(thetas.iter().cloned());
        }
        let (cand_data, cand_thetas): (&[Vec<f64>], &[Vec<f64>]) = if opts.accumulate {
            (&pool_data, &pool_thetas)
        } else {
            (&data, &thetas)
        };

        let scales = data_scales(cand_data, opts.standardize);
        let scaled: Vec<Vec<f64>> = scale_rows(cand_data, &scales);
        let query = scale_row(observed, &scales);

        // epsilon_t: the ceil(omega m)-th smallest distance of the current
        // batch, membership inclusive, so exactly that many batch points
        // qualify when distances are distinct.
        let batch_offset = cand_data.len() - m;
        let batch_deltas: Vec<f64> = (0..m)
            .map(|i| distance(&scaled[batch_offset + i], &query))
            .collect::<Result<_>>()?;
        let k = ((omega * m as f64).ceil() as usize).clamp(1, m);
        let mut sorted = batch_deltas.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let epsilon_t = sorted[k - 1];

        let (selected, nearest_fallback) = if opts.accumulate {
            ((0..scaled.len()).collect::<Vec<_>>(), false)
        } else {
            let members: Vec<usize> =
                (0..m).filter(|&i| batch_deltas[i] <= epsilon_t).collect();
            if members.len() < 2 {
                (nearest_indices(&batch_deltas, 2), true)
            } else {
                (members, false)
            }
        };

        let psi = gp_marginals(
            &selected.iter().map(|&i| scaled[i].clone()).collect::<Vec<_>>(),
            &selected.iter().map(|&i| cand_thetas[i].clone()).collect::<Vec<_>>(),
            &query,
            &prior_stds,
            Some(&prior_stds),
            root_seed,
            t,
            opts,
        )?;
        let combined = combine_with_proposal(&psi, &proposal, &phi0)?;

        record.iterations.push(IterationRecord {
            t: t as usize,
            sigma,
            epsilon: epsilon_t,
            n_local: vec![selected.len(); prior.dim()],
            psi_means: psi.means().to_vec(),
            psi_stds: psi.stds().to_vec(),
            phi_means: combined.gaussian.means().to_vec(),
            phi_stds: combined.gaussian.stds().to_vec(),
            cumulative_simulations: t as usize * m,
            elapsed_s: started.elapsed().as_secs_f64(),
            combine_fallback: combined.fallback.clone(),
            nearest_fallback,
            retries,
        });
        proposal = combined.gaussian;
    }

    Ok(AdaptiveOutcome {
        posterior: WeightedGaussianPosterior { phi: proposal, phi0, prior: prior.clone() },
        record,
    })
}

fn validate_common(
    model: &dyn SimulationModel,
    prior: &PriorSpec,
    observed: &[f64],
    m: usize,
) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("m must be >= 1"));
    }
    if prior.dim() != model.n_theta() {
        return Err(Error::invalid(format!(
            "prior dimension {} does not match model n_theta {}",
            prior.dim(),
            model.n_theta()
        )));
    }
    if observed.len() != model.n_data() {
        return Err(Error::invalid(format!(
            "observed dimension {} does not match model n_data {}",
            observed.len(),
            model.n_data()
        )));
    }
    if observed.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("observed data contains a non-finite entry"));
    }
    Ok(())
}

/// Simulates one batch with per-index child seeds; errors propagate.
fn simulate_batch(
    model: &dyn SimulationModel,
    thetas: &[Vec<f64>],
    root_seed: u64,
    t: u64,
) -> Result<Vec<Vec<f64>>> {
    thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            model.simulate(theta, seed::derive(root_seed, &[tag::SIMULATE, t, i as u64, 0]))
        })
        .collect()
}

/// Adaptive-loop sampling: each draw retries with a fresh parameter up to 10
/// times on simulator failure, then aborts with the underlying diagnostic.
/// Returns (thetas, perturbed data, retry count).
fn draw_and_simulate(
    model: &dyn SimulationModel,
    proposal: &IndependentGaussian,
    m: usize,
    sigma: f64,
    root_seed: u64,
    t: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, usize)> {
    let results: Vec<Result<(Vec<f64>, Vec<f64>, usize)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut last_err = None;
            for attempt in 0..=10u64 {
                let theta = proposal
                    .sample(&mut seed::rng(root_seed, &[tag::DRAW, t, i as u64, attempt]));
                match model
                    .simulate(&theta, seed::derive(root_seed, &[tag::SIMULATE, t, i as u64, attempt]))
                {
                    Ok(mut d) => {
                        if sigma > 0.0 {
                            let mut rng =
                                seed::rng(root_seed, &[tag::PERTURB, t, i as u64, attempt]);
                            for v in d.iter_mut() {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                *v += sigma * z;
                            }
                        }
                        return Ok((theta, d, attempt as usize));
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Err(Error::Simulation {
                model: "adaptive_igpr",
                reason: format!(
                    "draw {i} of iteration {t} failed 10 consecutive resamples; last error: {}",
                    last_err.map(|e| e.to_string()).unwrap_or_default()
                ),
            })
        })
        .collect();

    let mut thetas = Vec::with_capacity(m);
    let mut data = Vec::with_capacity(m);
    let mut retries = 0;
    for r in results {
        let (theta, d, att) = r?;
        thetas.push(theta);
        data.push(d);
        retries += att;
    }
    Ok((thetas, data, retries))
}

/// Per-coordinate population stds of a point cloud; unit scale when
/// standardization is off or a coordinate is degenerate.
fn data_scales(points: &[Vec<f64>], standardize: bool) -> Vec<f64> {
    let dim = points.first().map_or(0, |p| p.len());
    if !standardize {
        return vec![1.0; dim];
    }
    let n = points.len() as f64;
    (0..dim)
        .map(|k| {
            let mean = points.iter().map(|p| p[k]).sum::<f64>() / n;
            let var = points.iter().map(|p| (p[k] - mean) * (p[k] - mean)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 1e-300 {
                s
            } else {
                1.0
            }
        })
        .collect()
}

fn scale_row(row: &[f64], scales: &[f64]) -> Vec<f64> {
    row.iter().zip(scales).map(|(v, s)| v / s).collect()
}

fn scale_rows(rows: &[Vec<f64>], scales: &[f64]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| scale_row(r, scales)).collect()
}

/// Local selection with the strict cut-off, falling back to the k nearest
/// points when fewer than 2 qualify.
fn select_or_nearest(deltas: &[f64], epsilon: f64, k: usize) -> (Vec<usize>, bool) {
    let selected = select_local(deltas, epsilon);
    if selected.len() >= 2 {
        (selected, false)
    } else {
        (nearest_indices(deltas, k), true)
    }
}

fn nearest_indices(deltas: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].partial_cmp(&deltas[b]).unwrap());
    order.truncate(k.max(1).min(deltas.len()));
    order
}

/// Fits one GP per parameter dimension on the shared selected inputs and
/// evaluates it at the query; optionally clips each std at the prior std.
#[allow(clippy::too_many_arguments)]
fn gp_marginals(
    inputs: &[Vec<f64>],
    thetas: &[Vec<f64>],
    query: &[f64],
    prior_stds: &[f64],
    clip_to: Option<&[f64]>,
    root_seed: u64,
    t: u64,
    opts: &IgprOptions,
) -> Result<IndependentGaussian> {
    let n_theta = prior_stds.len();
    let per_dim: Vec<Result<(f64, f64)>> = (0..n_theta)
        .into_par_iter()
        .map(|j| {
            let responses: Vec<f64> = thetas.iter().map(|th| th[j]).collect();
            let train = TrainingSet::new(inputs.to_vec(), responses)?;
            let cfg = FitConfig {
                family: opts.kernel,
                ard: opts.ard,
                restarts: opts.fit_restarts,
                max_iters: opts.fit_max_iters,
                tol: opts.fit_tol,
                seed: seed::derive(root_seed, &[tag::FIT, t, j as u64]),
                fallback_variance: prior_stds[j] * prior_stds[j],
                starts: None,
            };
            let hp = gp_fit(&train, &cfg)?;
            let pred = gp_predict(&train, &hp, query)?;
            let mut std = pred.variance.sqrt();
            if let Some(limits) = clip_to {
                if std > limits[j] {
                    std = limits[j];
                }
            }
            Ok((pred.mean, std))
        })
        .collect();

    let mut means = Vec::with_capacity(n_theta);
    let mut stds = Vec::with_capacity(n_theta);
    for r in per_dim {
        let (mean, std) = r?;
        means.push(mean);
        stds.push(std);
    }
    IndependentGaussian::new(means, stds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ig(means: &[f64], stds: &[f64]) -> IndependentGaussian {
        IndependentGaussian::new(means.to_vec(), stds.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let a = vec![0.0; 16];
        let b = vec![1.0; 16];
        assert!((distance(&a, &b).unwrap() - 4.0).abs() < 1e-12);
        assert!(distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn combine_direct_substitution() {
        let psi = ig(&[1.0], &[1.0]);
        let q = ig(&[0.0], &[2.0_f64.sqrt()]);
        let phi0 = ig(&[0.0], &[2.0]);
        let c = combine_with_proposal(&psi, &q, &phi0).unwrap();
        assert!(!c.fallback[0]);
        // precision 1 - 0.5 + 0.25 = 0.75
        assert!((c.gaussian.std(0) * c.gaussian.std(0) - 4.0 / 3.0).abs() < 1e-12);
        assert!((c.gaussian.mean(0) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn combine_neutrality_is_exact() {
        let psi = ig(&[0.3, -1.7], &[0.4, 2.2]);
        let phi0 = ig(&[0.0, 1.0], &[1.0, 3.0]);
        let c = combine_with_proposal(&psi, &phi0, &phi0).unwrap();
        assert_eq!(c.gaussian, psi);
        assert!(c.fallback.iter().all(|f| !f));
    }

    #[test]
    fn combine_fallback_on_negative_precision() {
        let psi = ig(&[0.0], &[2.0]);
        let q = ig(&[0.5], &[0.1_f64.sqrt()]);
        let phi0 = ig(&[0.0], &[1.0]);
        // precision 0.25 - 10 + 1 < 0
        let c = combine_with_proposal(&psi, &q, &phi0).unwrap();
        assert!(c.fallback[0]);
        assert_eq!(c.gaussian.mean(0), 0.5);
        assert!((c.gaussian.std(0) - 0.1_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn schedule_paper_default_properties() {
        let s = TemperingSchedule::paper_default(10).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(*s.sigmas().last().unwrap(), 0.0);
        for w in s.sigmas().windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!((s.sigmas()[0] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(TemperingSchedule::from_sigmas(vec![]).is_err());
        assert!(TemperingSchedule::from_sigmas(vec![0.1, 0.2, 0.0]).is_err());
        assert!(TemperingSchedule::from_sigmas(vec![0.1, 0.05]).is_err());
        assert!(TemperingSchedule::from_sigmas(vec![0.1, 0.0]).is_ok());
        assert!(TemperingSchedule::from_sigmas(vec![0.0]).is_ok());
    }

    #[test]
    fn quantile_convention_counts_inclusive_members() {
        // distinct distances: exactly ceil(omega m) members at the cut-off
        let deltas = [0.9, 0.1, 0.5, 0.7, 0.3];
        let m = deltas.len();
        for omega in [0.2, 0.4, 0.6, 1.0] {
            let k = ((omega * m as f64).ceil() as usize).clamp(1, m);
            let mut sorted = deltas.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let eps = sorted[k - 1];
            let count = deltas.iter().filter(|&&d| d <= eps).count();
            assert_eq!(count, k);
        }
    }

    #[test]
    fn marginal_moments_normal_prior_cancels() {
        let phi = ig(&[2.0], &[0.5]);
        let phi0 = ig(&[2.0], &[0.5]);
        let prior = PriorSpec::normal(&[(2.0, 0.25)]).unwrap();
        let post = WeightedGaussianPosterior { phi: phi.clone(), phi0, prior };
        let (mean, std) = post.marginal_moments(0).unwrap();
        assert!((mean - 2.0).abs() < 1e-6);
        assert!((std - 0.5).abs() < 1e-6);
    }

    #[test]
    fn marginal_mean_stays_inside_uniform_support() {
        let phi = ig(&[5.0], &[0.3]);
        let phi0 = ig(&[0.0], &[6.0 / 12f64.sqrt()]);
        let prior = PriorSpec::uniform(&[(-3.0, 3.0)]).unwrap();
        let post = WeightedGaussianPosterior { phi, phi0, prior };
        let (mean, _) = post.marginal_moments(0).unwrap();
        assert!((-3.0..=3.0).contains(&mean));
        assert!(mean > 2.0, "mass should pile up near the upper bound");
    }

    #[test]
    fn out_of_range_dimension_rejected() {
        let phi = ig(&[0.0], &[1.0]);
        let phi0 = ig(&[0.0], &[1.0]);
        let prior = PriorSpec::uniform(&[(-3.0, 3.0)]).unwrap();
        let post = WeightedGaussianPosterior { phi, phi0, prior };
        assert!(post.marginal_moments(1).is_err());
    }
}
