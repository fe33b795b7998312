//! Two-metabolite power-law pathway with multiplicative white noise on the
//! first rate equation:
//!
//!   dX1/dt = (alpha X2^-0.4 - beta1 X1^0.5) * exp(xi_t)
//!   dX2/dt = beta1 X1^0.5 - beta2 X1^-1 X2^0.4
//!
//! xi_t ~ N(0, 1e-2) redrawn per step, X1(0) = 1.2, X2(0) = 1. The recorded
//! signal is X(t) = X1 + X2, reduced to the 16 summary statistics.
//!
//! Parameters are inferred on log scale: theta = (log alpha, log beta1,
//! log beta2), exponentiated internally.

use super::{check_theta_len, SimulationModel};
use crate::dist::PriorSpec;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::{summary_stats, TimeSeries, SUMMARY_DIM};
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

#[derive(Debug, Clone)]
pub struct SSystem {
    pub dt: f64,
    /// Integration steps; the recorded series has steps + 1 points.
    pub steps: usize,
    pub noise_off: bool,
}

impl Default for SSystem {
    fn default() -> Self {
        Self { dt: 0.01, steps: 1000, noise_off: false }
    }
}

impl SSystem {
    pub fn noise_off() -> Self {
        Self { noise_off: true, ..Self::default() }
    }

    /// Noise-off trajectory of (X1, X2); exposed for integrator checks.
    pub fn deterministic_trajectory(&self, theta: &[f64]) -> Result<Vec<(f64, f64)>> {
        check_theta_len("s_system", theta, 3)?;
        let (alpha, beta1, beta2) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
        let mut x1 = 1.2_f64;
        let mut x2 = 1.0_f64;
        let mut traj = Vec::with_capacity(self.steps + 1);
        traj.push((x1, x2));
        for _ in 0..self.steps {
            let f1 = alpha * x2.powf(-0.4) - beta1 * x1.sqrt();
            let f2 = beta1 * x1.sqrt() - beta2 * x2.powf(0.4) / x1;
            x1 += self.dt * f1;
            x2 += self.dt * f2;
            if !(x1 > 0.0 && x2 > 0.0) {
                return Err(Error::Simulation {
                    model: "s_system",
                    reason: "state left the positive quadrant".to_string(),
                });
            }
            traj.push((x1, x2));
        }
        Ok(traj)
    }
}

impl SimulationModel for SSystem {
    fn name(&self) -> &'static str {
        "s_system"
    }

    fn n_theta(&self) -> usize {
        3
    }

    fn n_data(&self) -> usize {
        SUMMARY_DIM
    }

    fn theta_names(&self) -> Vec<&'static str> {
        vec!["log_alpha", "log_beta1", "log_beta2"]
    }

    fn truth(&self) -> Vec<f64> {
        vec![0.0, 0.0, 0.0]
    }

    fn prior(&self) -> PriorSpec {
        // N(-0.2, 0.2) per dimension, second argument read as a variance.
        PriorSpec::normal(&[(-0.2, 0.2), (-0.2, 0.2), (-0.2, 0.2)]).expect("static prior")
    }

    fn simulate(&self, theta: &[f64], seed_val: u64) -> Result<Vec<f64>> {
        check_theta_len("s_system", theta, 3)?;
        if theta.iter().any(|v| v.abs() > 10.0) {
            return Err(Error::invalid("s_system: |log parameter| must be <= 10"));
        }
        let (alpha, beta1, beta2) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
        let mut rng = seed::rng(seed_val, &[seed::tag::SIMULATE]);
        let noise_std = 0.1; // Var(xi) = 1e-2

        let mut x1 = 1.2_f64;
        let mut x2 = 1.0_f64;
        let mut signal = Vec::with_capacity(self.steps + 1);
        signal.push(x1 + x2);
        for step in 0..self.steps {
            let xi = if self.noise_off {
                0.0
            } else {
                let z: f64 = StandardNormal.sample(&mut rng);
                noise_std * z
            };
            let f1 = (alpha * x2.powf(-0.4) - beta1 * x1.sqrt()) * xi.exp();
            let f2 = beta1 * x1.sqrt() - beta2 * x2.powf(0.4) / x1;
            x1 += self.dt * f1;
            x2 += self.dt * f2;
            if !(x1 > 0.0 && x2 > 0.0) || !x1.is_finite() || !x2.is_finite() {
                return Err(Error::Simulation {
                    model: "s_system",
                    reason: format!("state left the positive quadrant at step {step}"),
                });
            }
            signal.push(x1 + x2);
        }
        Ok(summary_stats(&TimeSeries::new(signal, self.dt)?)?.to_vec())
    }

    fn config(&self) -> serde_json::Value {
        json!({
            "dt": self.dt,
            "steps": self.steps,
            "noise_variance": 1e-2,
            "noise_off": self.noise_off,
            "initial": [1.2, 1.0],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stochastic_runs_differ_and_stay_finite() {
        let m = SSystem::default();
        let a = m.simulate(&[0.0, 0.0, 0.0], 1).unwrap();
        let b = m.simulate(&[0.0, 0.0, 0.0], 2).unwrap();
        assert_ne!(a, b);
        assert!(a.iter().chain(b.iter()).all(|v| v.is_finite()));
    }

    #[test]
    fn out_of_bounds_parameters_rejected() {
        let m = SSystem::default();
        assert!(m.simulate(&[11.0, 0.0, 0.0], 0).is_err());
    }

    #[test]
    fn doubling_alpha_raises_terminal_x1() {
        let m = SSystem::noise_off();
        let base = m.deterministic_trajectory(&[0.0, 0.0, 0.0]).unwrap();
        let up = m.deterministic_trajectory(&[2.0_f64.ln(), 0.0, 0.0]).unwrap();
        assert!(up.last().unwrap().0 > base.last().unwrap().0);
    }
}
