//! Five-state Hodgkin-Huxley membrane model with a noisy injected current.
//!
//! Membrane equation (C_m = 1):
//!
//!   C_m dV/dt = -I_l - I_Na - I_K - I_M - I_e
//!
//! with leak, transient sodium (gates m, h), delayed-rectifier potassium
//! (gate n) and slow non-inactivating potassium (gate p) currents. The
//! injected current is redrawn every step: (1/10) I_e ~ N(-0.5, sigma^2).
//!
//! Twelve parameters on log/sign scales (theta5 = log(-E_l) etc.), all
//! exponentiated internally. Voltage is recorded for 100 ms at dt = 0.025 ms,
//! i.e. 4001 samples, then reduced to the 16 summary statistics.
//!
//! Gating variables advance by exponential Euler (exact for frozen rates);
//! the voltage advances by explicit Euler.

use super::{check_theta_len, SimulationModel};
use crate::dist::PriorSpec;
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::{summary_stats, TimeSeries, SUMMARY_DIM};
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

/// Table of prior boxes for theta_1..theta_12.
pub const PRIOR_BOXES: [(f64, f64); 12] = [
    (-5.30, -4.20),
    (2.30, 3.40),
    (0.92, 2.01),
    (-5.65, -4.55),
    (3.55, 4.65),
    (3.21, 4.32),
    (3.91, 5.01),
    (3.40, 4.50),
    (-1.39, -0.29),
    (3.00, 4.09),
    (6.21, 7.31),
    (-0.69, 0.41),
];

pub const TRUTH: [f64; 12] =
    [-4.60, 2.99, 1.60, -4.96, 4.24, 3.91, 4.60, 4.09, -0.69, 3.68, 6.90, 0.0];

#[derive(Debug, Clone)]
pub struct HodgkinHuxley {
    pub dt: f64,
    pub steps: usize,
    /// Deterministic drive I_e = -5 instead of the noisy current.
    pub noise_off: bool,
}

impl Default for HodgkinHuxley {
    fn default() -> Self {
        Self { dt: 0.025, steps: 4000, noise_off: false }
    }
}

/// Physical parameters decoded from the log/sign conventions.
#[derive(Debug, Clone, Copy)]
pub struct HhParams {
    pub g_l: f64,
    pub g_na: f64,
    pub g_k: f64,
    pub g_m: f64,
    pub e_l: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub v_t: f64,
    pub beta_n1: f64,
    pub beta_n2: f64,
    pub tau_max: f64,
    pub sigma: f64,
}

impl HhParams {
    pub fn from_theta(theta: &[f64]) -> Self {
        Self {
            g_l: theta[0].exp(),
            g_na: theta[1].exp(),
            g_k: theta[2].exp(),
            g_m: theta[3].exp(),
            e_l: -theta[4].exp(),
            e_na: theta[5].exp(),
            e_k: -theta[6].exp(),
            v_t: -theta[7].exp(),
            beta_n1: theta[8].exp(),
            beta_n2: theta[9].exp(),
            tau_max: theta[10].exp(),
            sigma: theta[11].exp(),
        }
    }
}

/// Rate functions at voltage `v`; 0/0 removable singularities are replaced by
/// their limits.
pub fn rates(v: f64, p: &HhParams) -> GateRates {
    let vt = p.v_t;
    let x_m = v - vt - 13.0;
    let alpha_m = if x_m.abs() < 1e-9 { 1.28 } else { -0.32 * x_m / ((-x_m / 4.0).exp() - 1.0) };
    let x_bm = v - vt - 40.0;
    let beta_m = if x_bm.abs() < 1e-9 { 1.4 } else { 0.28 * x_bm / ((x_bm / 5.0).exp() - 1.0) };
    let alpha_h = 0.128 * (-(v - vt - 17.0) / 18.0).exp();
    let beta_h = 4.0 / (1.0 + (-(v - vt - 40.0) / 5.0).exp());
    let x_n = v - vt - 15.0;
    let alpha_n = if x_n.abs() < 1e-9 { 0.16 } else { -0.032 * x_n / ((-x_n / 5.0).exp() - 1.0) };
    let beta_n = p.beta_n1 * (-(v - vt - 10.0) / p.beta_n2).exp();
    let p_inf = 1.0 / (1.0 + (-(v + 35.0) / 10.0).exp());
    let tau_p = p.tau_max / (3.3 * ((v + 35.0) / 20.0).exp() + (-(v + 35.0) / 20.0).exp());
    GateRates { alpha_m, beta_m, alpha_h, beta_h, alpha_n, beta_n, p_inf, tau_p }
}

#[derive(Debug, Clone, Copy)]
pub struct GateRates {
    pub alpha_m: f64,
    pub beta_m: f64,
    pub alpha_h: f64,
    pub beta_h: f64,
    pub alpha_n: f64,
    pub beta_n: f64,
    pub p_inf: f64,
    pub tau_p: f64,
}

impl HodgkinHuxley {
    pub fn noise_off() -> Self {
        Self { noise_off: true, ..Self::default() }
    }

    fn check_box(theta: &[f64]) -> Result<()> {
        for (j, (&t, &(lo, hi))) in theta.iter().zip(PRIOR_BOXES.iter()).enumerate() {
            let w = hi - lo;
            if t < lo - 0.1 * w || t > hi + 0.1 * w {
                return Err(Error::invalid(format!(
                    "hh: theta_{} = {t:.4} outside the widened prior box [{:.4}, {:.4}]",
                    j + 1,
                    lo - 0.1 * w,
                    hi + 0.1 * w
                )));
            }
        }
        Ok(())
    }

    /// Voltage trace including the initial sample (steps + 1 values).
    pub fn voltage_trace(&self, theta: &[f64], seed_val: u64) -> Result<Vec<f64>> {
        check_theta_len("hh", theta, 12)?;
        Self::check_box(theta)?;
        let p = HhParams::from_theta(theta);
        let mut rng = seed::rng(seed_val, &[seed::tag::SIMULATE]);

        let mut v = -70.0_f64;
        let (mut m, mut h, mut n, mut pp) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        let mut trace = Vec::with_capacity(self.steps + 1);
        trace.push(v);
        for step in 0..self.steps {
            let r = rates(v, &p);

            let i_l = p.g_l * (v - p.e_l);
            let i_na = p.g_na * m * m * m * h * (v - p.e_na);
            let i_k = p.g_k * n * n * n * n * (v - p.e_k);
            let i_m = p.g_m * pp * (v - p.e_k);
            let i_e = if self.noise_off {
                -5.0
            } else {
                let z: f64 = StandardNormal.sample(&mut rng);
                10.0 * (-0.5 + p.sigma * z)
            };

            // exponential Euler on the gates, explicit Euler on V
            m = gate_step(m, r.alpha_m, r.beta_m, self.dt);
            h = gate_step(h, r.alpha_h, r.beta_h, self.dt);
            n = gate_step(n, r.alpha_n, r.beta_n, self.dt);
            pp = r.p_inf + (pp - r.p_inf) * (-self.dt / r.tau_p).exp();
            v += self.dt * (-(i_l + i_na + i_k + i_m) - i_e);

            let t_ms = (step + 1) as f64 * self.dt;
            if !v.is_finite() {
                return Err(Error::Simulation {
                    model: "hh",
                    reason: format!("non-finite voltage at t = {t_ms:.3} ms"),
                });
            }
            for (name, g) in [("m", m), ("h", h), ("n", n), ("p", pp)] {
                if !g.is_finite() || !(-0.01..=1.01).contains(&g) {
                    return Err(Error::Simulation {
                        model: "hh",
                        reason: format!("gating variable {name} = {g:.4} at t = {t_ms:.3} ms"),
                    });
                }
            }
            trace.push(v);
        }
        Ok(trace)
    }
}

fn gate_step(x: f64, alpha: f64, beta: f64, dt: f64) -> f64 {
    let rate = alpha + beta;
    let x_inf = alpha / rate;
    x_inf + (x - x_inf) * (-dt * rate).exp()
}

impl SimulationModel for HodgkinHuxley {
    fn name(&self) -> &'static str {
        "hh"
    }

    fn n_theta(&self) -> usize {
        12
    }

    fn n_data(&self) -> usize {
        SUMMARY_DIM
    }

    fn theta_names(&self) -> Vec<&'static str> {
        vec![
            "log_g_l",
            "log_g_na",
            "log_g_k",
            "log_g_m",
            "log_neg_e_l",
            "log_e_na",
            "log_neg_e_k",
            "log_neg_v_t",
            "log_beta_n1",
            "log_beta_n2",
            "log_tau_max",
            "log_sigma",
        ]
    }

    fn truth(&self) -> Vec<f64> {
        TRUTH.to_vec()
    }

    fn prior(&self) -> PriorSpec {
        PriorSpec::uniform(&PRIOR_BOXES).expect("static prior")
    }

    fn simulate(&self, theta: &[f64], seed_val: u64) -> Result<Vec<f64>> {
        let trace = self.voltage_trace(theta, seed_val)?;
        Ok(summary_stats(&TimeSeries::new(trace, self.dt)?)?.to_vec())
    }

    fn config(&self) -> serde_json::Value {
        json!({
            "dt_ms": self.dt,
            "steps": self.steps,
            "noise_off": self.noise_off,
            "v0_mv": -70.0,
            "current_noise": "per-step",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_truth_run_spikes() {
        let m = HodgkinHuxley::noise_off();
        let trace = m.voltage_trace(&TRUTH, 0).unwrap();
        assert_eq!(trace.len(), 4001);
        let mut crossings = 0;
        for w in trace.windows(2) {
            if w[0] <= 0.0 && w[1] > 0.0 {
                crossings += 1;
            }
        }
        assert!(crossings >= 1, "no spikes in 100 ms");
        assert!(trace.iter().all(|&v| (-100.0..=60.0).contains(&v)));
    }

    #[test]
    fn gating_steady_state_is_exact() {
        let p = HhParams::from_theta(&TRUTH);
        let r = rates(-70.0, &p);
        let m_inf = r.alpha_m / (r.alpha_m + r.beta_m);
        // dm/dt = alpha (1 - m) - beta m vanishes at m_inf
        let residual = r.alpha_m * (1.0 - m_inf) - r.beta_m * m_inf;
        assert!(residual.abs() < 1e-12);
    }

    #[test]
    fn out_of_box_theta_rejected() {
        let m = HodgkinHuxley::default();
        let mut theta = TRUTH.to_vec();
        theta[0] = -6.0; // below the widened box
        assert!(m.simulate(&theta, 0).is_err());
    }

    #[test]
    fn rate_singularities_are_removable() {
        let p = HhParams::from_theta(&TRUTH);
        // V - V_T - 13 = 0 exactly at this voltage
        let v_sing = p.v_t + 13.0;
        let r = rates(v_sing, &p);
        assert!((r.alpha_m - 1.28).abs() < 1e-9);
        let r_near = rates(v_sing + 1e-6, &p);
        assert!((r.alpha_m - r_near.alpha_m).abs() < 1e-5);
    }
}
