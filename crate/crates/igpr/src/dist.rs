//! Independent-Gaussian products and per-dimension priors.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

const LN_2PI: f64 = 1.8378770664093453;

/// A product of per-dimension 1-D Gaussians.
///
/// Represents the raw GP marginals psi, the proposal-corrected marginals phi,
/// the Gaussian moment-match of the prior phi_0, and proposal priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentGaussian {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl IndependentGaussian {
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() || means.is_empty() {
            return Err(Error::invalid(format!(
                "means ({}) and stds ({}) must be equal-length and non-empty",
                means.len(),
                stds.len()
            )));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("non-finite mean"));
        }
        if stds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("stds must be strictly positive and finite"));
        }
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.means[j]
    }

    pub fn std(&self, j: usize) -> f64 {
        self.stds[j]
    }

    /// Log density of the j-th 1-D factor at `x`.
    pub fn log_pdf_dim(&self, j: usize, x: f64) -> f64 {
        let z = (x - self.means[j]) / self.stds[j];
        -0.5 * z * z - self.stds[j].ln() - 0.5 * LN_2PI
    }

    /// Log density at a full vector; factorizes across dimensions.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::invalid("dimension mismatch in log_pdf"));
        }
        Ok((0..self.dim()).map(|j| self.log_pdf_dim(j, x[j])).sum())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.stds)
            .map(|(&m, &s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    }
}

/// One prior dimension: a uniform interval or a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorDim {
    Uniform { lower: f64, upper: f64 },
    Normal { mean: f64, variance: f64 },
}

impl PriorDim {
    pub fn mean(&self) -> f64 {
        match *self {
            PriorDim::Uniform { lower, upper } => 0.5 * (lower + upper),
            PriorDim::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            PriorDim::Uniform { lower, upper } => (upper - lower) * (upper - lower) / 12.0,
            PriorDim::Normal { variance, .. } => variance,
        }
    }

    /// Support interval; unbounded for the Gaussian case.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            PriorDim::Uniform { lower, upper } => (lower, upper),
            PriorDim::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match *self {
            PriorDim::Uniform { lower, upper } => {
                if x >= lower && x <= upper {
                    -(upper - lower).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorDim::Normal { mean, variance } => {
                let z = x - mean;
                -0.5 * z * z / variance - 0.5 * (variance.ln() + LN_2PI)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PriorDim::Uniform { lower, upper } => rng.gen_range(lower..upper),
            PriorDim::Normal { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + variance.sqrt() * z
            }
        }
    }
}

/// Independent per-dimension prior specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    dims: Vec<PriorDim>,
}

impl PriorSpec {
    pub fn new(dims: Vec<PriorDim>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("prior needs at least one dimension"));
        }
        for (j, d) in dims.iter().enumerate() {
            match *d {
                PriorDim::Uniform { lower, upper } => {
                    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                        return Err(Error::invalid(format!(
                            "uniform prior dim {j}: need finite lower < upper, got [{lower}, {upper}]"
                        )));
                    }
                }
                PriorDim::Normal { mean, variance } => {
                    if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
                        return Err(Error::invalid(format!(
                            "normal prior dim {j}: need finite mean and variance > 0"
                        )));
                    }
                }
            }
        }
        Ok(Self { dims })
    }

    pub fn uniform(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|&(lower, upper)| PriorDim::Uniform { lower, upper })
                .collect(),
        )
    }

    pub fn normal(moments: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            moments
                .iter()
                .map(|&(mean, variance)| PriorDim::Normal { mean, variance })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[PriorDim] {
        &self.dims
    }

    /// The independent Gaussian sharing the prior's per-dimension moments:
    /// Normal dimensions pass through, Uniform[a,b] maps to
    /// ((a+b)/2, (b-a)/sqrt(12)).
    pub fn gaussian_moments(&self) -> IndependentGaussian {
        let means = self.dims.iter().map(|d| d.mean()).collect();
        let stds = self.dims.iter().map(|d| d.variance().sqrt()).collect();
        IndependentGaussian::new(means, stds).expect("valid prior produces valid moments")
    }

    pub fn support(&self, j: usize) -> (f64, f64) {
        self.dims[j].support()
    }

    pub fn log_pdf_dim(&self, j: usize, x: f64) -> f64 {
        self.dims[j].log_pdf(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.dims.iter().map(|d| d.sample(rng)).collect()
    }
}
