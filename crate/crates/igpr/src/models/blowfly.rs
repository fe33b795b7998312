//! Delayed blowfly population recursion:
//!
//!   N_{t+1} = P N_{t-tau} exp(-N_{t-tau} / N0) e_t + N_t exp(-delta eps_t)
//!
//! with e_t ~ N(1/sigma_p^2, 1/sigma_p^2) and eps_t ~ N(1/sigma_d^2,
//! 1/sigma_d^2), second arguments read as variances. The decay factor uses
//! exp(-delta eps_t): the delta-times-noise decay form of the source
//! literature rather than the sign-free display equation.
//!
//! theta = (log P, log delta, log N0, log sigma_d, log sigma_p, log tau);
//! tau is rounded to the nearest positive integer inside the simulator while
//! staying continuous for inference.

use super::{check_theta_len, SimulationModel};
use crate::dist::PriorSpec;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::{summary_stats, TimeSeries, SUMMARY_DIM};
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

#[derive(Debug, Clone)]
pub struct Blowfly {
    pub burn_in: usize,
    pub keep: usize,
    pub noise_off: bool,
}

impl Default for Blowfly {
    fn default() -> Self {
        Self { burn_in: 50, keep: 1000, noise_off: false }
    }
}

impl Blowfly {
    pub fn noise_off() -> Self {
        Self { noise_off: true, ..Self::default() }
    }

    pub fn delay_from_log(log_tau: f64) -> usize {
        (log_tau.exp().round() as i64).max(1) as usize
    }

    /// Runs the recursion and returns the retained series.
    pub fn series(&self, theta: &[f64], seed_val: u64) -> Result<Vec<f64>> {
        check_theta_len("blowfly", theta, 6)?;
        let p = theta[0].exp();
        let delta = theta[1].exp();
        let n0 = theta[2].exp();
        let sigma_d = theta[3].exp();
        let sigma_p = theta[4].exp();
        let tau = Self::delay_from_log(theta[5]);
        if !(p.is_finite() && n0.is_finite() && n0 > 0.0) {
            return Err(Error::invalid("blowfly: exponentiated parameters must be finite"));
        }

        let mut rng = seed::rng(seed_val, &[seed::tag::SIMULATE]);
        let e_mean = 1.0 / (sigma_p * sigma_p);
        let e_std = e_mean.sqrt();
        let eps_mean = 1.0 / (sigma_d * sigma_d);
        let eps_std = eps_mean.sqrt();

        let total = self.burn_in + self.keep;
        // history N_t = N0 for t <= 0
        let mut series = vec![n0; tau + 1];
        let mut zeros_in_a_row = 0usize;
        for step in 0..total {
            let k = series.len() - 1;
            let n_cur = series[k];
            let n_del = series[k - tau];
            let (e, eps) = if self.noise_off {
                (1.0, 1.0)
            } else {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                (e_mean + e_std * z1, eps_mean + eps_std * z2)
            };
            let mut next = p * n_del * (-n_del / n0).exp() * e + n_cur * (-delta * eps).exp();
            if !next.is_finite() || next > 1e12 {
                return Err(Error::Simulation {
                    model: "blowfly",
                    reason: format!("population overflow at step {step}"),
                });
            }
            if next <= 0.0 {
                next = 0.0;
                zeros_in_a_row += 1;
                if zeros_in_a_row >= 50 {
                    return Err(Error::Simulation {
                        model: "blowfly",
                        reason: format!("population underflowed to 0 for 50 steps ending at {step}"),
                    });
                }
            } else {
                zeros_in_a_row = 0;
            }
            series.push(next);
        }
        Ok(series[tau + 1 + self.burn_in..].to_vec())
    }
}

impl SimulationModel for Blowfly {
    fn name(&self) -> &'static str {
        "blowfly"
    }

    fn n_theta(&self) -> usize {
        6
    }

    fn n_data(&self) -> usize {
        SUMMARY_DIM
    }

    fn theta_names(&self) -> Vec<&'static str> {
        vec!["log_p", "log_delta", "log_n0", "log_sigma_d", "log_sigma_p", "log_tau"]
    }

    fn truth(&self) -> Vec<f64> {
        vec![4.0, -1.4, 6.5, 0.25, 0.5, 2.8]
    }

    fn prior(&self) -> PriorSpec {
        PriorSpec::normal(&[
            (2.0, 4.0),
            (-1.8, 0.16),
            (6.0, 0.25),
            (-0.75, 1.0),
            (-0.5, 1.0),
            (2.7, 0.01),
        ])
        .expect("static prior")
    }

    fn simulate(&self, theta: &[f64], seed_val: u64) -> Result<Vec<f64>> {
        let series = self.series(theta, seed_val)?;
        Ok(summary_stats(&TimeSeries::new(series, 1.0)?)?.to_vec())
    }

    fn config(&self) -> serde_json::Value {
        json!({
            "burn_in": self.burn_in,
            "keep": self.keep,
            "noise_off": self.noise_off,
            "initial_history": "N0",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_rounding_convention() {
        // log tau = 2.8 -> tau = round(16.44) = 16
        assert_eq!(Blowfly::delay_from_log(2.8), 16);
        assert_eq!(Blowfly::delay_from_log(-5.0), 1);
    }

    #[test]
    fn truth_series_is_finite_and_nonconstant() {
        let m = Blowfly::default();
        let s = m.series(&m.truth(), 3).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.iter().all(|v| v.is_finite()));
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(s.iter().any(|v| (v - mean).abs() > 1e-6));
    }

    #[test]
    fn strong_decay_regime_never_increases_after_burn_in() {
        // P e^-1 < 1 - e^-delta guarantees decay from an N0-level start.
        let m = Blowfly::noise_off();
        let theta = [-2.0, -1.4, 6.5, 0.25, 0.5, 2.8];
        let p = (-2.0_f64).exp();
        let delta = (-1.4_f64).exp();
        assert!(p * (-1.0_f64).exp() < 1.0 - (-delta).exp());
        let s = m.series(&theta, 0).unwrap();
        for w in s.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "increase: {} -> {}", w[0], w[1]);
        }
    }
}
