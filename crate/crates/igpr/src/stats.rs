//! The fixed 16-dimensional summary-statistics vector.
//!
//! Every time-series model maps its raw trajectory through this pipeline
//! before inference. Four derived quantities — |amplitude|, |velocity|,
//! |acceleration|, and the periodogram PSD — are each reduced to
//! (mean, variance, skewness, kurtosis), quantity-major:
//!
//! index 0..3   amplitude moments
//! index 4..7   velocity moments
//! index 8..11  acceleration moments
//! index 12..15 PSD moments
//!
//! This ordering is a frozen contract; changing it is a breaking format
//! change for every stored bundle.

use crate::error::{Error, Result};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

pub const SUMMARY_DIM: usize = 16;

/// A raw simulator trajectory with its sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    /// Needs at least 4 samples (second differences and a non-trivial PSD).
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::invalid(format!(
                "time series needs length >= 4, got {}",
                values.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt must be positive and finite"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("time series contains a non-finite value"));
        }
        Ok(Self { values, dt })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// The 16 summary statistics, quantity-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryVector(pub [f64; SUMMARY_DIM]);

impl SummaryVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }
}

/// Sample moments with denominator n: mean, variance, skewness m3/m2^1.5 and
/// raw kurtosis m4/m2^2 (Gaussian -> 3). A zero-variance sample returns
/// skewness = kurtosis = 0 by convention.
pub fn moments(sample: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if sample.is_empty() {
        return Err(Error::invalid("moments of an empty sample"));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Ok((mean, 0.0, 0.0, 0.0));
    }
    Ok((mean, m2, m3 / m2.powf(1.5), m4 / (m2 * m2)))
}

/// One-sided periodogram of the mean-removed, unwindowed series, normalized
/// by n * dt. Returns the positive-frequency bins k = 1..=n/2; bin k sits at
/// frequency k / (n * dt).
pub fn periodogram(series: &TimeSeries) -> Vec<f64> {
    let n = series.values.len();
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series
        .values
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = n as f64 * series.dt;
    (1..=n / 2).map(|k| buf[k].norm_sqr() / norm).collect()
}

/// The full 16-entry pipeline.
pub fn summary_stats(series: &TimeSeries) -> Result<SummaryVector> {
    let x = &series.values;
    let dt = series.dt;

    let amplitude: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let velocity: Vec<f64> = x.windows(2).map(|w| ((w[1] - w[0]) / dt).abs()).collect();
    let acceleration: Vec<f64> = x
        .windows(3)
        .map(|w| ((w[2] - 2.0 * w[1] + w[0]) / (dt * dt)).abs())
        .collect();
    let psd = periodogram(series);

    let mut out = [0.0; SUMMARY_DIM];
    for (block, sample) in [&amplitude, &velocity, &acceleration, &psd].into_iter().enumerate() {
        let (mean, var, skew, kurt) = moments(sample)?;
        out[4 * block] = mean;
        out[4 * block + 1] = var;
        out[4 * block + 2] = skew;
        out[4 * block + 3] = kurt;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("summary statistics contain a non-finite entry".into()));
    }
    Ok(SummaryVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_degenerate_blocks() {
        let s = TimeSeries::new(vec![-2.5; 64], 1.0).unwrap();
        let v = summary_stats(&s).unwrap().0;
        assert_eq!(&v[0..4], &[2.5, 0.0, 0.0, 0.0]);
        assert_eq!(&v[4..8], &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&v[8..12], &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&v[12..16], &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn ramp_velocity_block_is_exact() {
        let s = TimeSeries::new((0..100).map(|i| 3.0 * i as f64).collect(), 1.0).unwrap();
        let v = summary_stats(&s).unwrap().0;
        assert_eq!(&v[4..8], &[3.0, 0.0, 0.0, 0.0]);
        assert_eq!(&v[8..12], &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sinusoid_psd_peaks_at_tone_bin() {
        let n = 1000;
        let dt = 1e-3;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 * dt).sin())
            .collect();
        let s = TimeSeries::new(x, dt).unwrap();
        let psd = periodogram(&s);
        let argmax = psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        // bins start at k = 1, so the tone at 5 Hz is index 4
        assert_eq!(argmax + 1, 5);
    }

    #[test]
    fn moments_hand_computed_pair() {
        let (mean, var, skew, kurt) = moments(&[-1.0, 1.0]).unwrap();
        assert_eq!((mean, var, skew, kurt), (0.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn moments_zero_variance_convention() {
        let (mean, var, skew, kurt) = moments(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((mean, var, skew, kurt), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn moments_empty_rejected() {
        assert!(moments(&[]).is_err());
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(TimeSeries::new(vec![1.0, 2.0, 3.0], 1.0).is_err());
        assert!(TimeSeries::new(vec![1.0; 8], 0.0).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN, 3.0, 4.0], 1.0).is_err());
    }

    #[test]
    fn shift_only_moves_amplitude_block() {
        let base: Vec<f64> = (0..256).map(|i| (i as f64 * 0.17).sin()).collect();
        let shifted: Vec<f64> = base.iter().map(|v| v + 100.0).collect();
        let a = summary_stats(&TimeSeries::new(base, 0.5).unwrap()).unwrap().0;
        let b = summary_stats(&TimeSeries::new(shifted, 0.5).unwrap()).unwrap().0;
        for i in 4..16 {
            assert!(
                (a[i] - b[i]).abs() <= 1e-9 * a[i].abs().max(1.0),
                "entry {i}: {} vs {}",
                a[i],
                b[i]
            );
        }
        assert!((b[0] - (a[0] + 100.0)).abs() < 1e-9 * 100.0);
    }

    #[test]
    fn scale_covariance() {
        let base: Vec<f64> = (0..256).map(|i| (i as f64 * 0.29).sin() + 0.2).collect();
        let scaled: Vec<f64> = base.iter().map(|v| 3.0 * v).collect();
        let a = summary_stats(&TimeSeries::new(base, 0.25).unwrap()).unwrap().0;
        let b = summary_stats(&TimeSeries::new(scaled, 0.25).unwrap()).unwrap().0;
        for block in 0..3 {
            let i = 4 * block;
            assert!((b[i] - 3.0 * a[i]).abs() < 1e-9 * a[i].abs().max(1.0));
            assert!((b[i + 1] - 9.0 * a[i + 1]).abs() < 1e-8 * a[i + 1].abs().max(1.0));
            assert!((b[i + 2] - a[i + 2]).abs() < 1e-8);
            assert!((b[i + 3] - a[i + 3]).abs() < 1e-7);
        }
    }
}
