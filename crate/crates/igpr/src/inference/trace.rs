//! Per-iteration run records and their line-delimited serialization.

use crate::error::Result;
use serde::{Deserialize, Serialize};

/// State captured after one tempering iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub sigma: f64,
    /// Cut-off distance actually used this iteration (in the possibly
    /// standardized distance space).
    pub epsilon: f64,
    /// Local training-set size per parameter dimension.
    pub n_local: Vec<usize>,
    pub psi_means: Vec<f64>,
    pub psi_stds: Vec<f64>,
    pub phi_means: Vec<f64>,
    pub phi_stds: Vec<f64>,
    /// t * m by construction; failed draws are retried and tallied in
    /// `retries`, not here.
    pub cumulative_simulations: usize,
    pub elapsed_s: f64,
    /// Dimensions where the precision combination fell back to the proposal.
    pub combine_fallback: Vec<bool>,
    /// Whether the local cut-off selected fewer than 2 points and the
    /// nearest-point fallback engaged.
    pub nearest_fallback: bool,
    pub retries: usize,
}

/// The full iteration trace of one adaptive run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iterations: Vec<IterationRecord>,
}

impl RunRecord {
    /// One JSON object per line, one line per iteration.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for rec in &self.iterations {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut iterations = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            iterations.push(serde_json::from_str(line)?);
        }
        Ok(Self { iterations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let rec = RunRecord {
            iterations: vec![IterationRecord {
                t: 1,
                sigma: 0.09,
                epsilon: 1.5,
                n_local: vec![3, 3],
                psi_means: vec![0.1, 0.2],
                psi_stds: vec![1.0, 1.1],
                phi_means: vec![0.1, 0.2],
                phi_stds: vec![0.9, 1.0],
                cumulative_simulations: 5,
                elapsed_s: 0.25,
                combine_fallback: vec![false, true],
                nearest_fallback: false,
                retries: 0,
            }],
        };
        let text = rec.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(RunRecord::from_jsonl(&text).unwrap(), rec);
    }
}
