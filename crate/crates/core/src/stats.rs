//! Binomial and sample-mean summaries at the fixed 95% level.

use serde::Serialize;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityEstimate {
    pub event: String,
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ProbabilityEstimate {
    pub fn new(event: impl Into<String>, successes: u64, trials: u64) -> Self {
        assert!(trials > 0 && successes <= trials, "{successes} successes in {trials} trials");
        let estimate = successes as f64 / trials as f64;
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z_95);
        Self { event: event.into(), successes, trials, estimate, ci_low, ci_high }
    }

    /// Binomial standard error `sqrt(p (1 - p) / n)` of the point estimate.
    pub fn std_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval, clamped so it always contains `k / n`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0).min(p) };
    let high = if successes == trials { 1.0 } else { (centre + half).min(1.0).max(p) };
    (low, high)
}

/// Mean and standard error of the mean (sample variance with `n - 1`).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
