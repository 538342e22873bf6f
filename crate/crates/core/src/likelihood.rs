//! Profiled marginal likelihood of the model `Y ~ N(μ1, ν² D⁻¹ R D⁻¹)`,
//! `D = diag(d)`, shared by all three kriging variants.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kernel::CorrelationSystem;

fn check(d: &DVector<f64>, sys: &CorrelationSystem, y: &[f64]) -> Result<()> {
    if d.len() != sys.n() {
        return Err(Error::DimensionMismatch {
            expected: sys.n(),
            got: d.len(),
        });
    }
    if y.len() != sys.n() {
        return Err(Error::DimensionMismatch {
            expected: sys.n(),
            got: y.len(),
        });
    }
    if let Some(v) = d.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidArgument(format!("weight {v} is not positive")));
    }
    Ok(())
}

/// `μ̂ = dᵀR⁻¹diag(d)Y / dᵀR⁻¹d`.
pub fn profiled_mu(d: &DVector<f64>, sys: &CorrelationSystem, y: &[f64]) -> Result<f64> {
    check(d, sys, y)?;
    let rinv_d = sys.solve(d);
    let dy = DVector::from_iterator(d.len(), d.iter().zip(y).map(|(a, b)| a * b));
    Ok(rinv_d.dot(&dy) / rinv_d.dot(d))
}

/// `ν̂² = (1/n)(Y−μ1)ᵀdiag(d)R⁻¹diag(d)(Y−μ1)`.
pub fn profiled_nu2(d: &DVector<f64>, sys: &CorrelationSystem, y: &[f64], mu: f64) -> Result<f64> {
    check(d, sys, y)?;
    let e = DVector::from_iterator(d.len(), d.iter().zip(y).map(|(a, b)| a * (b - mu)));
    Ok(sys.whiten(&e).norm_squared() / d.len() as f64)
}

/// Profiled parameters and log-likelihood at a given weight vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub mu: f64,
    pub nu2: f64,
    /// `-(n/2)log ν̂² + Σ log dᵢ - ½log|R| - n/2`; `-∞` when `ν̂² = 0`.
    pub log_likelihood: f64,
}

pub fn profile(d: &DVector<f64>, sys: &CorrelationSystem, y: &[f64]) -> Result<Profile> {
    let mu = profiled_mu(d, sys, y)?;
    let nu2 = profiled_nu2(d, sys, y, mu)?;
    Ok(Profile {
        mu,
        nu2,
        log_likelihood: log_likelihood_at(d, sys, nu2),
    })
}

pub(crate) fn log_likelihood_at(d: &DVector<f64>, sys: &CorrelationSystem, nu2: f64) -> f64 {
    let n = d.len() as f64;
    if !(nu2 > 0.0) {
        return f64::NEG_INFINITY;
    }
    -0.5 * n * nu2.ln() + d.iter().map(|v| v.ln()).sum::<f64>() - 0.5 * sys.log_det() - 0.5 * n
}
