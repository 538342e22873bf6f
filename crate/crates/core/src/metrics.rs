//! Prediction accuracy and interval-score metrics.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Miscoverage level used for all reported intervals.
pub const ALPHA: f64 = 0.05;

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("rmse of an empty vector".into()));
    }
    let sse: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Mean interval score `(u−l) + (2/α){(l−t)₊ + (t−u)₊}`.
pub fn interval_score(l: &[f64], u: &[f64], t: &[f64], alpha: f64) -> Result<f64> {
    if l.len() != t.len() || u.len() != t.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            got: if l.len() != t.len() { l.len() } else { u.len() },
        });
    }
    if t.is_empty() {
        return Err(Error::InvalidArgument("interval score of an empty vector".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let mut total = 0.0;
    for (i, ((lo, hi), ti)) in l.iter().zip(u).zip(t).enumerate() {
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "interval {i} has lower {lo} above upper {hi}"
            )));
        }
        total += (hi - lo) + 2.0 / alpha * ((lo - ti).max(0.0) + (ti - hi).max(0.0));
    }
    Ok(total / t.len() as f64)
}

/// Two-sided standard normal quantile `z_{1−α/2}`.
pub fn normal_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Interval score of `mean ± z_{1−α/2}·sd` intervals.
pub fn gaussian_interval_score(mean: &[f64], sd: &[f64], truth: &[f64], alpha: f64) -> Result<f64> {
    let z = normal_quantile(alpha);
    let l: Vec<f64> = mean.iter().zip(sd).map(|(m, s)| m - z * s).collect();
    let u: Vec<f64> = mean.iter().zip(sd).map(|(m, s)| m + z * s).collect();
    interval_score(&l, &u, truth, alpha)
}
