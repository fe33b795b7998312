//! Stationary kernels with a constant diagonal.
//!
//! All three families satisfy k(d, d) = signal_variance exactly and are
//! continuous at zero offset, which is what the local-regression convergence
//! argument needs from the kernel.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    SquaredExponential,
    Exponential,
    RationalQuadratic,
}

/// Kernel family plus its parameters.
///
/// `lengthscales` has one entry per input dimension; a shared lengthscale is
/// represented by equal entries. `rq_alpha` is only read by the
/// rational-quadratic family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub rq_alpha: f64,
}

impl KernelSpec {
    /// A spec with one lengthscale shared across `dim` input dimensions.
    pub fn shared(family: KernelFamily, dim: usize, lengthscale: f64, signal_variance: f64) -> Self {
        Self {
            family,
            lengthscales: vec![lengthscale; dim],
            signal_variance,
            rq_alpha: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(Error::invalid("kernel needs at least one lengthscale"));
        }
        if self.lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("lengthscales must be strictly positive"));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::invalid("signal_variance must be strictly positive"));
        }
        if !(self.rq_alpha.is_finite() && self.rq_alpha > 0.0) {
            return Err(Error::invalid("rq_alpha must be strictly positive"));
        }
        Ok(())
    }

    /// k(a, b). Errors on dimension mismatch with the lengthscale vector.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.validate()?;
        if a.len() != self.dim() || b.len() != self.dim() {
            return Err(Error::invalid(format!(
                "kernel_eval dimension mismatch: kernel dim {}, points {} and {}",
                self.dim(),
                a.len(),
                b.len()
            )));
        }
        Ok(self.from_scaled_sq(scaled_sq_dist(a, b, &self.lengthscales)))
    }

    /// Kernel value from the lengthscale-scaled squared distance
    /// `r2w = sum_k ((a_k - b_k) / l_k)^2`.
    pub(crate) fn from_scaled_sq(&self, r2w: f64) -> f64 {
        let c = self.signal_variance;
        match self.family {
            KernelFamily::SquaredExponential => c * (-0.5 * r2w).exp(),
            KernelFamily::Exponential => c * (-r2w.sqrt()).exp(),
            KernelFamily::RationalQuadratic => {
                let a = self.rq_alpha;
                c * (1.0 + r2w / (2.0 * a)).powf(-a)
            }
        }
    }
}

pub(crate) fn scaled_sq_dist(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((&x, &y), &l)| {
            let d = (x - y) / l;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_diagonal_is_signal_variance() {
        let k = KernelSpec::shared(KernelFamily::SquaredExponential, 1, 1.0, 1.0);
        assert_eq!(k.eval(&[0.0], &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn se_direct_substitution() {
        let k = KernelSpec::shared(KernelFamily::SquaredExponential, 1, 1.0, 1.0);
        let v = k.eval(&[0.0], &[1.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        assert!((v - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn exponential_euclidean_distance() {
        let k = KernelSpec::shared(KernelFamily::Exponential, 2, 1.0, 2.0);
        let v = k.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - 2.0 * (-5.0f64).exp()).abs() < 1e-12);
        assert!((v - 0.013476).abs() < 1e-6);
    }

    #[test]
    fn symmetry_and_diagonal_all_families() {
        for family in [
            KernelFamily::SquaredExponential,
            KernelFamily::Exponential,
            KernelFamily::RationalQuadratic,
        ] {
            let k = KernelSpec::shared(family, 3, 0.7, 2.5);
            let a = [0.1, -0.4, 2.0];
            let b = [1.3, 0.0, -0.5];
            assert_eq!(k.eval(&a, &b).unwrap(), k.eval(&b, &a).unwrap());
            assert!((k.eval(&a, &a).unwrap() - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = KernelSpec::shared(KernelFamily::SquaredExponential, 2, 1.0, 1.0);
        assert!(k.eval(&[0.0], &[0.0]).is_err());
        assert!(k.eval(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut k = KernelSpec::shared(KernelFamily::SquaredExponential, 1, 1.0, 1.0);
        k.signal_variance = -1.0;
        assert!(k.validate().is_err());
        k.signal_variance = 1.0;
        k.lengthscales[0] = 0.0;
        assert!(k.validate().is_err());
    }
}
