//! Noisy predictive distribution at a query point.

use super::linalg::{build_gram, cholesky_with_escalation};
use super::{noise_floor, GaussianPrediction, GpHyperparams, TrainingSet};
use crate::error::{Error, Result};
use nalgebra::DVector;

/// Predictive mean and variance of the noisy joint model:
///
/// mean = mu + k(x,X) (K + nu I)^-1 (Y - mu 1)
/// var  = k(x,x) - k(x,X) (K + nu I)^-1 k(X,x) + nu
///
/// The trailing `+ nu` is deliberate: the response being predicted carries
/// the observation noise, so the predictive variance never drops below it.
pub fn gp_predict(
    train: &TrainingSet,
    hp: &GpHyperparams,
    query: &[f64],
) -> Result<GaussianPrediction> {
    hp.validate()?;
    if hp.kernel.dim() != train.dim() || query.len() != train.dim() {
        return Err(Error::invalid(format!(
            "gp_predict dimension mismatch: train {}, kernel {}, query {}",
            train.dim(),
            hp.kernel.dim(),
            query.len()
        )));
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("query contains a non-finite entry"));
    }

    let m = train.len();
    let var_y = train.response_variance();
    let nu = hp.noise_variance.max(noise_floor(var_y));
    let gram = build_gram(train, &hp.kernel)?;
    let (chol, nu_used) = cholesky_with_escalation(&gram, nu, var_y)?;

    let mut k_star = DVector::zeros(m);
    for i in 0..m {
        k_star[i] = hp.kernel.eval(query, &train.inputs()[i])?;
    }
    let resid = DVector::from_iterator(m, train.responses().iter().map(|y| y - hp.mean_const));
    let alpha = chol.solve(&resid);
    let mean = hp.mean_const + k_star.dot(&alpha);

    let w = chol.solve(&k_star);
    let c = hp.kernel.signal_variance;
    // The quadratic form cannot exceed k(x,x) exactly; clamp the last-bit
    // rounding so the variance keeps its `>= nu` guarantee.
    let qform = k_star.dot(&w).min(c);
    let variance = c - qform + nu_used;

    Ok(GaussianPrediction { mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{KernelFamily, KernelSpec};

    fn hp_unit(dim: usize) -> GpHyperparams {
        GpHyperparams {
            kernel: KernelSpec::shared(KernelFamily::SquaredExponential, dim, 1.0, 1.0),
            noise_variance: 1.0,
            mean_const: 0.0,
        }
    }

    #[test]
    fn single_point_scalar_substitution() {
        let train = TrainingSet::new(vec![vec![0.7]], vec![2.0]).unwrap();
        let p = gp_predict(&train, &hp_unit(1), &[0.7]).unwrap();
        assert!((p.mean - 1.0).abs() < 1e-12);
        assert!((p.variance - 1.5).abs() < 1e-12);
    }

    #[test]
    fn three_duplicated_inputs_sherman_morrison_value() {
        let train = TrainingSet::new(vec![vec![0.2]; 3], vec![3.0, 3.0, 3.0]).unwrap();
        let p = gp_predict(&train, &hp_unit(1), &[0.2]).unwrap();
        // (c m / nu) / (1 + c m / nu) * ybar with c = nu = 1, m = 3.
        assert!((p.mean - 2.25).abs() < 1e-10, "mean = {}", p.mean);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let train = TrainingSet::new(vec![vec![0.0, 1.0]], vec![1.0]).unwrap();
        assert!(gp_predict(&train, &hp_unit(2), &[0.0]).is_err());
        assert!(gp_predict(&train, &hp_unit(1), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn variance_never_below_noise() {
        let train = TrainingSet::new(
            (0..30).map(|i| vec![(i as f64 * 0.713).sin()]).collect(),
            (0..30).map(|i| (i as f64 * 1.37).cos()).collect(),
        )
        .unwrap();
        let hp = GpHyperparams {
            kernel: KernelSpec::shared(KernelFamily::SquaredExponential, 1, 0.2, 0.8),
            noise_variance: 0.05,
            mean_const: 0.0,
        };
        for q in [-1.0, -0.3, 0.0, 0.4, 0.99] {
            let p = gp_predict(&train, &hp, &[q]).unwrap();
            assert!(p.variance >= 0.05 - 1e-10);
        }
    }
}
