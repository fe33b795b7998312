//! Marginal likelihood and derivative-free hyperparameter search.

use super::linalg::{build_gram, cholesky_with_escalation, log_det_from_cholesky};
use super::{noise_floor, GpHyperparams, KernelFamily, KernelSpec, TrainingSet};
use crate::error::{Error, Result};
use crate::seed;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const LN_2PI: f64 = 1.8378770664093453;

/// Log density of the responses under N(mean_const * 1, K(X,X) + nu I).
///
/// The noise variance is floored at `noise_floor(var(responses))` and the
/// diagonal escalates on Cholesky failure before erroring.
pub fn log_marginal_likelihood(train: &TrainingSet, hp: &GpHyperparams) -> Result<f64> {
    hp.validate()?;
    if hp.kernel.dim() != train.dim() {
        return Err(Error::invalid(format!(
            "kernel dimension {} does not match training dimension {}",
            hp.kernel.dim(),
            train.dim()
        )));
    }
    let var_y = train.response_variance();
    let nu = hp.noise_variance.max(noise_floor(var_y));
    let gram = build_gram(train, &hp.kernel)?;
    let (chol, _) = cholesky_with_escalation(&gram, nu, var_y)?;
    let m = train.len();
    let resid = DVector::from_iterator(m, train.responses().iter().map(|y| y - hp.mean_const));
    let alpha = chol.solve(&resid);
    Ok(-0.5 * resid.dot(&alpha) - 0.5 * log_det_from_cholesky(&chol) - 0.5 * m as f64 * LN_2PI)
}

/// Search configuration for [`gp_fit`].
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub family: KernelFamily,
    /// Per-dimension lengthscales instead of one shared value.
    pub ard: bool,
    /// Number of optimizer starts; the first three are a deterministic spread
    /// around the data-driven initialization, further ones are seeded jitter.
    pub restarts: usize,
    /// Simplex iterations per start.
    pub max_iters: usize,
    /// Early-stop tolerance on the simplex objective spread; 0 disables.
    pub tol: f64,
    /// Seed for jittered restarts beyond the deterministic spread.
    pub seed: u64,
    /// Signal variance used by the single-point fallback (typically the
    /// prior variance of the response component). MLE is ill-posed at m = 1.
    pub fallback_variance: f64,
    /// Explicit starting points in log-parameter space
    /// `[ln l_1, .., ln l_k, ln c, ln nu]`; overrides the built-in starts.
    pub starts: Option<Vec<Vec<f64>>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::SquaredExponential,
            ard: false,
            restarts: 3,
            max_iters: 200,
            tol: 1e-8,
            seed: 0,
            fallback_variance: 1.0,
            starts: None,
        }
    }
}

struct FitSpace<'a> {
    train: &'a TrainingSet,
    family: KernelFamily,
    ard: bool,
    mean: f64,
    var_y: f64,
    floor: f64,
    /// Raw squared Euclidean distances, used by the shared-lengthscale path.
    d2: DMatrix<f64>,
    /// Inclusive bounds in log space, one per optimized parameter.
    bounds: Vec<(f64, f64)>,
}

impl<'a> FitSpace<'a> {
    fn n_params(&self) -> usize {
        if self.ard {
            self.train.dim() + 2
        } else {
            3
        }
    }

    fn decode(&self, p: &[f64]) -> (Vec<f64>, f64, f64) {
        let n_l = if self.ard { self.train.dim() } else { 1 };
        let lengthscales: Vec<f64> = p[..n_l].iter().map(|v| v.exp()).collect();
        let c = p[n_l].exp();
        let nu = p[n_l + 1].exp().max(self.floor);
        (lengthscales, c, nu)
    }

    fn objective(&self, p: &[f64]) -> f64 {
        for (v, (lo, hi)) in p.iter().zip(&self.bounds) {
            if !v.is_finite() || v < lo || v > hi {
                return f64::NEG_INFINITY;
            }
        }
        let (lengthscales, c, nu) = self.decode(p);
        let m = self.train.len();
        let spec = KernelSpec {
            family: self.family,
            lengthscales: if self.ard {
                lengthscales
            } else {
                vec![lengthscales[0]; self.train.dim()]
            },
            signal_variance: c,
            rq_alpha: 1.0,
        };
        let mut k = DMatrix::zeros(m, m);
        if self.ard {
            for i in 0..m {
                for j in 0..=i {
                    let r2w = super::kernel::scaled_sq_dist(
                        &self.train.inputs()[i],
                        &self.train.inputs()[j],
                        &spec.lengthscales,
                    );
                    let v = spec.from_scaled_sq(r2w);
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
        } else {
            let l2 = spec.lengthscales[0] * spec.lengthscales[0];
            for i in 0..m {
                for j in 0..=i {
                    let v = spec.from_scaled_sq(self.d2[(i, j)] / l2);
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
        }
        let (chol, _) = match cholesky_with_escalation(&k, nu, self.var_y) {
            Ok(x) => x,
            Err(_) => return f64::NEG_INFINITY,
        };
        let resid =
            DVector::from_iterator(m, self.train.responses().iter().map(|y| y - self.mean));
        let alpha = chol.solve(&resid);
        -0.5 * resid.dot(&alpha) - 0.5 * log_det_from_cholesky(&chol) - 0.5 * m as f64 * LN_2PI
    }
}

/// Maximum-likelihood hyperparameters via multi-start simplex search in
/// log-parameter space. Deterministic given `cfg.seed`.
///
/// With a single training pair the MLE is ill-posed; the fit then returns the
/// documented fallback: `c = fallback_variance`, `nu = c`, and the prior mean
/// set to the lone response.
pub fn gp_fit(train: &TrainingSet, cfg: &FitConfig) -> Result<GpHyperparams> {
    if cfg.restarts == 0 || cfg.max_iters == 0 {
        return Err(Error::invalid("restarts and max_iters must be >= 1"));
    }
    if !(cfg.fallback_variance.is_finite() && cfg.fallback_variance > 0.0) {
        return Err(Error::invalid("fallback_variance must be positive"));
    }
    if train.len() == 1 {
        let c = cfg.fallback_variance;
        return Ok(GpHyperparams {
            kernel: KernelSpec::shared(cfg.family, train.dim(), 1.0, c),
            noise_variance: c,
            mean_const: train.responses()[0],
        });
    }

    let mean = train.response_mean();
    let var_y = train.response_variance();
    let floor = noise_floor(var_y);
    let c0 = var_y.max(1e-10);
    let (med, maxd) = train.pairwise_distance_stats();

    let l_bounds = ((1e-3 * med).ln(), (3.0 * maxd).ln());
    let c_bounds = ((1e-6 * c0).ln(), (1e3 * c0).ln());
    let nu_bounds = (floor.ln(), (1e2 * c0).ln().max(floor.ln() + 1.0));
    let n_l = if cfg.ard { train.dim() } else { 1 };
    let mut bounds = vec![l_bounds; n_l];
    bounds.push(c_bounds);
    bounds.push(nu_bounds);

    let space = FitSpace {
        train,
        family: cfg.family,
        ard: cfg.ard,
        mean,
        var_y,
        floor,
        d2: raw_sq_dists(train),
        bounds,
    };

    let clamp = |v: f64, (lo, hi): (f64, f64)| v.clamp(lo, hi);
    let base_start = |l_mult: f64, nu_mult: f64| -> Vec<f64> {
        let mut p = vec![clamp((l_mult * med).ln(), l_bounds); n_l];
        p.push(clamp(c0.ln(), c_bounds));
        p.push(clamp((nu_mult * 0.1 * c0).ln(), nu_bounds));
        p
    };

    let starts: Vec<Vec<f64>> = match &cfg.starts {
        Some(s) => {
            for p in s {
                if p.len() != space.n_params() {
                    return Err(Error::invalid(format!(
                        "explicit start has {} parameters, expected {}",
                        p.len(),
                        space.n_params()
                    )));
                }
            }
            s.clone()
        }
        None => {
            let spread = [(1.0, 1.0), (0.2, 0.1), (5.0, 1.0)];
            let mut rng = seed::rng(cfg.seed, &[seed::tag::FIT]);
            (0..cfg.restarts)
                .map(|r| {
                    if r < spread.len() {
                        base_start(spread[r].0, spread[r].1)
                    } else {
                        let mut p = base_start(1.0, 1.0);
                        for (v, b) in p.iter_mut().zip(&space.bounds) {
                            *v = clamp(*v + 0.75 * standard_normal(&mut rng), *b);
                        }
                        p
                    }
                })
                .collect()
        }
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in &starts {
        let (x, f) = nelder_mead_max(|p| space.objective(p), start, 0.3, cfg.max_iters, cfg.tol);
        if f.is_finite() && best.as_ref().map_or(true, |(bf, _)| f > *bf) {
            best = Some((f, x));
        }
    }
    let (_, params) = best.ok_or_else(|| {
        Error::numerical("all hyperparameter search starts failed numerically".to_string())
    })?;

    let (lengthscales, c, nu) = space.decode(&params);
    Ok(GpHyperparams {
        kernel: KernelSpec {
            family: cfg.family,
            lengthscales: if cfg.ard {
                lengthscales
            } else {
                vec![lengthscales[0]; train.dim()]
            },
            signal_variance: c,
            rq_alpha: 1.0,
        },
        noise_variance: nu,
        mean_const: mean,
    })
}

fn raw_sq_dists(train: &TrainingSet) -> DMatrix<f64> {
    let m = train.len();
    let mut d2 = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            let v: f64 = train.inputs()[i]
                .iter()
                .zip(&train.inputs()[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    d2
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    StandardNormal.sample(rng)
}

/// Nelder-Mead maximization. Returns the best vertex ever evaluated, so the
/// result is never worse than the starting point.
fn nelder_mead_max<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    init_step: f64,
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += init_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut best = (simplex[0].clone(), values[0]);
    for (v, &val) in simplex.iter().zip(&values) {
        if val > best.1 {
            best = (v.clone(), val);
        }
    }

    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        if values[0] > best.1 {
            best = (simplex[0].clone(), values[0]);
        }
        if tol > 0.0 && values[0].is_finite() && values[n].is_finite() && values[0] - values[n] < tol
        {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in simplex.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }

        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = lerp(ALPHA);
        let f_r = f(&reflected);
        if f_r > values[0] {
            let expanded = lerp(GAMMA);
            let f_e = f(&expanded);
            if f_e > f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if f_r > values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            let contracted = if f_r > values[n] { lerp(RHO) } else { lerp(-RHO) };
            let f_c = f(&contracted);
            if f_c > values[n].max(f_r) {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    let target: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, x)| b + SIGMA * (x - b))
                        .collect();
                    values[i] = f(&target);
                    simplex[i] = target;
                }
            }
        }
        if values[n] > best.1 {
            best = (simplex[n].clone(), values[n]);
        }
    }
    for (v, &val) in simplex.iter().zip(&values) {
        if val > best.1 {
            best = (v.clone(), val);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(inputs: Vec<Vec<f64>>, responses: Vec<f64>) -> TrainingSet {
        TrainingSet::new(inputs, responses).unwrap()
    }

    #[test]
    fn lml_single_point_closed_form() {
        // N(0, c + nu) log density at its mean with c = nu = 1.
        let train = ts(vec![vec![0.0]], vec![0.0]);
        let hp = GpHyperparams {
            kernel: KernelSpec::shared(KernelFamily::SquaredExponential, 1, 1.0, 1.0),
            noise_variance: 1.0,
            mean_const: 0.0,
        };
        let v = log_marginal_likelihood(&train, &hp).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI * 2.0).ln();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        assert!((v - (-1.265512)).abs() < 1e-6);
    }

    #[test]
    fn lml_two_identical_inputs_closed_form() {
        // Covariance [[2,1],[1,2]]: det 3, value -ln(2 pi) - 0.5 ln 3.
        let train = ts(vec![vec![0.5], vec![0.5]], vec![0.0, 0.0]);
        let hp = GpHyperparams {
            kernel: KernelSpec::shared(KernelFamily::SquaredExponential, 1, 1.0, 1.0),
            noise_variance: 1.0,
            mean_const: 0.0,
        };
        let v = log_marginal_likelihood(&train, &hp).unwrap();
        let expected = -(2.0 * std::f64::consts::PI).ln() - 0.5 * 3.0_f64.ln();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - (-2.3871832107434003)).abs() < 1e-10);
    }

    #[test]
    fn lml_finite_across_noise_levels() {
        let train = ts(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![5.0, -5.0, 7.0, -7.0],
        );
        let kernel = KernelSpec::shared(KernelFamily::SquaredExponential, 1, 1.0, 1.0);
        let mut last = f64::NEG_INFINITY;
        for nu in [1e-6, 1e-3, 1.0, 1e3] {
            let hp = GpHyperparams {
                kernel: kernel.clone(),
                noise_variance: nu,
                mean_const: 0.0,
            };
            let v = log_marginal_likelihood(&train, &hp).unwrap();
            assert!(v.is_finite());
            assert_ne!(v, last);
            last = v;
        }
    }

    #[test]
    fn fit_constant_responses() {
        let train = ts(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![4.2; 4],
        );
        let hp = gp_fit(&train, &FitConfig::default()).unwrap();
        assert_eq!(hp.mean_const, 4.2);
        // Zero-variance data: the fitted noise sits at its floor.
        assert!(hp.noise_variance <= 1e-9, "nu = {}", hp.noise_variance);
    }

    #[test]
    fn fit_single_point_fallback() {
        let train = ts(vec![vec![0.3, 0.4]], vec![2.5]);
        let cfg = FitConfig {
            fallback_variance: 3.0,
            ..FitConfig::default()
        };
        let hp = gp_fit(&train, &cfg).unwrap();
        assert_eq!(hp.kernel.signal_variance, 3.0);
        assert_eq!(hp.noise_variance, 3.0);
        assert_eq!(hp.mean_const, 2.5);
    }

    #[test]
    fn fit_never_worse_than_explicit_start() {
        let train = ts(
            (0..12).map(|i| vec![i as f64 * 0.5]).collect(),
            (0..12).map(|i| (i as f64 * 0.5).sin()).collect(),
        );
        let start = vec![0.6_f64.ln(), 0.5_f64.ln(), 0.05_f64.ln()];
        let cfg = FitConfig {
            starts: Some(vec![start.clone()]),
            ..FitConfig::default()
        };
        let hp = gp_fit(&train, &cfg).unwrap();
        let fitted = log_marginal_likelihood(&train, &hp).unwrap();
        let hp0 = GpHyperparams {
            kernel: KernelSpec::shared(KernelFamily::SquaredExponential, 1, 0.6, 0.5),
            noise_variance: 0.05,
            mean_const: train.response_mean(),
        };
        let at_start = log_marginal_likelihood(&train, &hp0).unwrap();
        assert!(fitted >= at_start - 1e-9, "{fitted} < {at_start}");
    }

    #[test]
    fn fit_is_deterministic_given_seed() {
        let train = ts(
            (0..20).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect(),
            (0..20).map(|i| (i as f64 * 0.21).sin()).collect(),
        );
        let cfg = FitConfig {
            restarts: 5,
            seed: 99,
            ..FitConfig::default()
        };
        let a = gp_fit(&train, &cfg).unwrap();
        let b = gp_fit(&train, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nelder_mead_finds_quadratic_maximum() {
        let f = |p: &[f64]| -((p[0] - 1.5) * (p[0] - 1.5)) - (p[1] + 0.5) * (p[1] + 0.5);
        let (x, v) = nelder_mead_max(f, &[0.0, 0.0], 0.5, 300, 1e-12);
        assert!((x[0] - 1.5).abs() < 1e-4 && (x[1] + 0.5).abs() < 1e-4);
        assert!(v > -1e-7);
    }
}
