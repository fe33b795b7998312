//! Gaussian process regression with observation noise.
//!
//! The regression view here is unusual only in how it is used: the
//! "predictors" are simulated data vectors and the "response" is one scalar
//! component of the parameter vector that generated them. Everything in this
//! module is ordinary noisy-GP machinery: kernels with a constant diagonal,
//! marginal-likelihood hyperparameter fitting, and the explicit predictive
//! mean/variance of the noisy joint model (the predictive variance includes
//! the noise term, since the quantity being predicted is itself noisy).

mod kernel;
mod linalg;
mod mle;
mod predict;

pub use kernel::{KernelFamily, KernelSpec};
pub use mle::{gp_fit, log_marginal_likelihood, FitConfig};
pub use predict::gp_predict;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Paired training data: simulated data vectors and one scalar response each.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<Vec<f64>>,
    responses: Vec<f64>,
    dim: usize,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("training set must contain at least one pair"));
        }
        if inputs.len() != responses.len() {
            return Err(Error::invalid(format!(
                "inputs ({}) and responses ({}) must have equal length",
                inputs.len(),
                responses.len()
            )));
        }
        let dim = inputs[0].len();
        if dim == 0 {
            return Err(Error::invalid("inputs must have dimension >= 1"));
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != dim {
                return Err(Error::invalid(format!(
                    "input {i} has dimension {} but input 0 has {dim}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("input {i} contains a non-finite entry")));
            }
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("responses contain a non-finite entry"));
        }
        Ok(Self { inputs, responses, dim })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees m >= 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn response_mean(&self) -> f64 {
        self.responses.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance (denominator m) of the responses.
    pub fn response_variance(&self) -> f64 {
        let mean = self.response_mean();
        self.responses.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / self.len() as f64
    }

    /// (median, max) of the pairwise Euclidean input distances.
    /// Both fall back to 1.0 when degenerate (single point or all duplicates).
    pub(crate) fn pairwise_distance_stats(&self) -> (f64, f64) {
        let m = self.len();
        if m < 2 {
            return (1.0, 1.0);
        }
        let mut dists = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                let d2: f64 = self.inputs[i]
                    .iter()
                    .zip(&self.inputs[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                dists.push(d2.sqrt());
            }
        }
        dists.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let med = dists[dists.len() / 2];
        let max = *dists.last().unwrap();
        (if med > 0.0 { med } else { 1.0 }, if max > 0.0 { max } else { 1.0 })
    }
}

/// Kernel plus noise variance and constant prior mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub kernel: KernelSpec,
    pub noise_variance: f64,
    pub mean_const: f64,
}

impl GpHyperparams {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::invalid("noise_variance must be finite and >= 0"));
        }
        if !self.mean_const.is_finite() {
            return Err(Error::invalid("mean_const must be finite"));
        }
        Ok(())
    }
}

/// Predictive distribution at a single query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mean: f64,
    pub variance: f64,
}

/// Noise floor applied to every Gram assembly:
/// `max(1e-8 * var(responses), 1e-12)`. Keeps the duplicated-input limit
/// invertible.
pub fn noise_floor(response_variance: f64) -> f64 {
    (1e-8 * response_variance).max(1e-12)
}

/// Indices of pool entries with distance strictly below `epsilon`,
/// in pool order. An empty result is valid; callers decide the fallback.
pub fn select_local(distances: &[f64], epsilon: f64) -> Vec<usize> {
    distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d < epsilon)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_local_strict_boundary() {
        assert_eq!(select_local(&[0.1, 0.5, 0.9], 0.5), vec![0]);
    }

    #[test]
    fn select_local_infinite_epsilon_takes_all() {
        assert_eq!(select_local(&[0.1, 0.5, 0.9], f64::INFINITY), vec![0, 1, 2]);
    }

    #[test]
    fn select_local_can_be_empty() {
        assert!(select_local(&[1.0, 2.0], 0.5).is_empty());
    }

    #[test]
    fn training_set_invariants() {
        assert!(TrainingSet::new(vec![], vec![]).is_err());
        assert!(TrainingSet::new(vec![vec![0.0]], vec![1.0, 2.0]).is_err());
        assert!(TrainingSet::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0, 2.0]).is_err());
        assert!(TrainingSet::new(vec![vec![f64::NAN]], vec![1.0]).is_err());
        assert!(TrainingSet::new(vec![vec![0.0]], vec![f64::INFINITY]).is_err());
        let ts = TrainingSet::new(vec![vec![0.0], vec![1.0]], vec![2.0, 4.0]).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.response_mean(), 3.0);
        assert_eq!(ts.response_variance(), 1.0);
    }

    #[test]
    fn noise_floor_limits() {
        assert_eq!(noise_floor(0.0), 1e-12);
        assert!((noise_floor(1.0) - 1e-8).abs() < 1e-20);
    }
}
