//! Deterministic reductions and small statistical helpers.

use crate::error::{EngineError, Result};

/// Cascade summation. Deterministic for a fixed slice order and noticeably
/// more accurate than a running sum on long Monte Carlo vectors.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        let mut s = 0.0;
        for &x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(v) / v.len() as f64
}

/// Sample mean and standard error of the mean (ddof = 1).
/// A single observation gets a standard error of zero.
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    let m = mean(v);
    if n < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = v.iter().map(|&x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (m, (var / n as f64).sqrt())
}

/// Standard normal CDF. `erfc` keeps relative accuracy deep in the left tail.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail Q(z) = 1 - Phi(z), accurate for large `z`.
pub fn norm_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(EngineError::InvalidArgument(format!(
            "linear fit needs equally long vectors (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(EngineError::InsufficientData(format!(
            "linear fit needs at least 2 points (got {})",
            x.len()
        )));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx <= 0.0 {
        return Err(EngineError::InvalidArgument(
            "linear fit needs at least two distinct abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Degenerate flat data: the fit reproduces it exactly.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// Gaussian kernel density estimator with Silverman bandwidth.
pub struct GaussianKde {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl GaussianKde {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(EngineError::InsufficientData(format!(
                "kernel density needs at least 2 samples (got {})",
                samples.len()
            )));
        }
        let (m, _) = mean_and_se(samples);
        let sq: Vec<f64> = samples.iter().map(|&x| (x - m) * (x - m)).collect();
        let sd = (pairwise_sum(&sq) / (samples.len() as f64 - 1.0)).sqrt();
        if sd <= 0.0 {
            return Err(EngineError::InvalidArgument(
                "kernel density needs non-degenerate samples".into(),
            ));
        }
        let bw = 1.06 * sd * (samples.len() as f64).powf(-0.2);
        Ok(Self::with_bandwidth(samples, bw))
    }

    pub fn with_bandwidth(samples: &[f64], bandwidth: f64) -> Self {
        assert!(bandwidth > 0.0, "bandwidth must be positive");
        GaussianKde { samples: samples.to_vec(), bandwidth }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, z: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / ((self.samples.len() as f64) * h * (2.0 * std::f64::consts::PI).sqrt());
        let mut s = 0.0;
        for &x in &self.samples {
            let u = (z - x) / h;
            s += (-0.5 * u * u).exp();
        }
        norm * s
    }
}
