//! 1-D toy model: d = erf(theta + eta), eta ~ N(0, 0.1^2).

use super::{check_theta_len, SimulationModel};
use crate::dist::PriorSpec;
use crate::error::Result;
use crate::seed;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;
use statrs::function::erf::erf;

#[derive(Debug, Clone)]
pub struct Toy1d {
    pub noise_std: f64,
    pub noise_off: bool,
}

impl Default for Toy1d {
    fn default() -> Self {
        Self { noise_std: 0.1, noise_off: false }
    }
}

impl Toy1d {
    pub fn noise_off() -> Self {
        Self { noise_off: true, ..Self::default() }
    }
}

impl SimulationModel for Toy1d {
    fn name(&self) -> &'static str {
        "toy1d"
    }

    fn n_theta(&self) -> usize {
        1
    }

    fn n_data(&self) -> usize {
        1
    }

    fn theta_names(&self) -> Vec<&'static str> {
        vec!["theta"]
    }

    fn truth(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn prior(&self) -> PriorSpec {
        PriorSpec::uniform(&[(-3.0, 3.0)]).expect("static prior")
    }

    fn simulate(&self, theta: &[f64], seed_val: u64) -> Result<Vec<f64>> {
        check_theta_len("toy1d", theta, 1)?;
        let eta = if self.noise_off {
            0.0
        } else {
            let mut rng = seed::rng(seed_val, &[seed::tag::SIMULATE]);
            let z: f64 = StandardNormal.sample(&mut rng);
            self.noise_std * z
        };
        Ok(vec![erf(theta[0] + eta)])
    }

    fn config(&self) -> serde_json::Value {
        json!({ "noise_std": self.noise_std, "noise_off": self.noise_off })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_off_erf_values() {
        let m = Toy1d::noise_off();
        assert_eq!(m.simulate(&[0.0], 0).unwrap()[0], 0.0);
        let v = m.simulate(&[1.0], 0).unwrap()[0];
        assert!((v - 0.842701).abs() < 1e-6);
    }

    #[test]
    fn paper_observation_is_a_plausible_draw() {
        // erf^-1(0.869) - 1 is about 0.6 sigma of the eta noise.
        let z0 = statrs::function::erf::erf_inv(0.869);
        let pull = (z0 - 1.0) / 0.1;
        assert!(pull.abs() < 1.0, "pull = {pull}");
        assert!((z0 - 1.0 - 0.0596).abs() < 0.02);
    }

    #[test]
    fn output_stays_in_open_unit_interval() {
        let m = Toy1d::default();
        for s in 0..50 {
            let v = m.simulate(&[2.9], s).unwrap()[0];
            assert!(v > -1.0 && v < 1.0);
        }
    }
}
