//! Deterministic identity model for test scaffolding: d = theta, optionally
//! plus independent N(0, sigma^2) per coordinate.

use super::{check_theta_len, SimulationModel};
use crate::dist::PriorSpec;
use crate::error::Result;
use crate::seed;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

#[derive(Debug, Clone)]
pub struct IdentityDebug {
    pub dim: usize,
    pub noise_std: f64,
}

impl Default for IdentityDebug {
    fn default() -> Self {
        Self { dim: 1, noise_std: 0.0 }
    }
}

impl IdentityDebug {
    pub fn new(dim: usize, noise_std: f64) -> Self {
        Self { dim, noise_std }
    }
}

impl SimulationModel for IdentityDebug {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn n_theta(&self) -> usize {
        self.dim
    }

    fn n_data(&self) -> usize {
        self.dim
    }

    fn theta_names(&self) -> Vec<&'static str> {
        (0..self.dim).map(|_| "theta").collect()
    }

    fn truth(&self) -> Vec<f64> {
        vec![1.0; self.dim]
    }

    fn prior(&self) -> PriorSpec {
        PriorSpec::uniform(&vec![(-3.0, 3.0); self.dim]).expect("static prior")
    }

    fn simulate(&self, theta: &[f64], seed_val: u64) -> Result<Vec<f64>> {
        check_theta_len("identity", theta, self.dim)?;
        if self.noise_std == 0.0 {
            return Ok(theta.to_vec());
        }
        let mut rng = seed::rng(seed_val, &[seed::tag::SIMULATE]);
        Ok(theta
            .iter()
            .map(|&t| {
                let z: f64 = StandardNormal.sample(&mut rng);
                t + self.noise_std * z
            })
            .collect())
    }

    fn config(&self) -> serde_json::Value {
        json!({ "dim": self.dim, "noise_std": self.noise_std })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_identity() {
        let m = IdentityDebug::new(2, 0.0);
        assert_eq!(m.simulate(&[1.0, 2.0], 7).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn noisy_output_stays_close() {
        let m = IdentityDebug::new(3, 0.1);
        for s in 0..100 {
            let out = m.simulate(&[0.5, -0.5, 0.0], s).unwrap();
            for (o, t) in out.iter().zip([0.5, -0.5, 0.0]) {
                assert!((o - t).abs() < 0.5, "5 sigma excursion");
            }
        }
    }
}
