//! Ordinary, rational and heteroskedastic rational kriging.
//!
//! All three share one fitted representation, [`HrkFit`], and differ only in
//! the weight vector `c̃ = (c₀, c)`: OK uses `(1, 0, …, 0)`, RK the Perron
//! eigenvector of `R̃ᵀR⁻¹R̃`, and HRK the maximizer of the profiled likelihood.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ccsa::OptimizerStatus;
use crate::dataset::{Dataset, Scaling};
use crate::error::{Error, Result};
use crate::kernel::{build_system, CorrelationSystem, KernelSpec};
use crate::likelihood::{log_likelihood_at, profile, profiled_mu};
use crate::perron::perron_with_fallback;
use crate::points::Points;
use crate::theta::{self, ThetaSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ok,
    Rk,
    Hrk,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ok => "ok",
            ModelKind::Rk => "rk",
            ModelKind::Hrk => "hrk",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ok" => Ok(ModelKind::Ok),
            "rk" => Ok(ModelKind::Rk),
            "hrk" => Ok(ModelKind::Hrk),
            other => Err(Error::NotFound(format!("model kind '{other}'"))),
        }
    }
}

/// Outcome flag of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitStatus {
    Ok,
    /// Constant response; lengthscale search skipped and `ν² = 0`.
    Degenerate,
    /// HRK weight optimization failed; the RK weights were kept.
    Fallback,
}

impl fmt::Display for FitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitStatus::Ok => "ok",
            FitStatus::Degenerate => "degenerate",
            FitStatus::Fallback => "fallback",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub status: FitStatus,
    /// Profiled log-likelihood at the returned parameters.
    pub log_likelihood: f64,
    /// `g(c_RK)` and `g(c_final)` for HRK fits.
    pub g_start: Option<f64>,
    pub g_final: Option<f64>,
    pub optimizer: Option<OptimizerStatus>,
    pub optimizer_iterations: Option<usize>,
    pub warning: Option<String>,
}

impl FitInfo {
    fn plain(status: FitStatus, log_likelihood: f64) -> Self {
        Self {
            status,
            log_likelihood,
            g_start: None,
            g_final: None,
            optimizer: None,
            optimizer_iterations: None,
            warning: None,
        }
    }
}

/// Options shared by the three fitting routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub seed: u64,
    pub search: ThetaSearch,
    /// Start the search here instead of the `0.5·√p` heuristic.
    pub warm_start: Option<Vec<f64>>,
    /// Skip the search and use these lengthscales.
    pub fixed_theta: Option<Vec<f64>>,
    /// Tie all lengthscales together; `None` ties them when `n < 3p`.
    pub isotropic: Option<bool>,
    /// Outer-iteration cap of the HRK weight optimizer.
    pub hrk_max_iter: usize,
    /// Stopping tolerance on `|Δg|` and `‖Δc‖∞`.
    pub hrk_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            search: ThetaSearch::default(),
            warm_start: None,
            fixed_theta: None,
            isotropic: None,
            hrk_max_iter: 200,
            hrk_tol: 1e-8,
        }
    }
}

impl FitOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A fitted kriging model of any of the three kinds.
#[derive(Debug, Clone)]
pub struct HrkFit {
    kind: ModelKind,
    data: Dataset,
    sys: CorrelationSystem,
    mu: f64,
    nu2: f64,
    ctilde: DVector<f64>,
    d: DVector<f64>,
    w: DVector<f64>,
    info: FitInfo,
}

impl HrkFit {
    /// Assembles a fit from a factorized system and weights, profiling
    /// `μ` and `ν²` at `d = R̃c̃`.
    pub fn from_weights(
        kind: ModelKind,
        data: Dataset,
        sys: CorrelationSystem,
        ctilde: DVector<f64>,
        status: FitStatus,
    ) -> Result<Self> {
        let n = data.n();
        if ctilde.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: ctilde.len(),
            });
        }
        if sys.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sys.n(),
            });
        }
        let d = weights_to_d(&sys, &ctilde);
        let (mu, nu2, ll) = if status == FitStatus::Degenerate {
            (data.y()[0], 0.0, f64::NEG_INFINITY)
        } else {
            let p = profile(&d, &sys, data.y())?;
            (p.mu, p.nu2, p.log_likelihood)
        };
        let e = DVector::from_iterator(n, d.iter().zip(data.y()).map(|(a, y)| a * (y - mu)));
        let w = sys.solve(&e);
        Ok(Self {
            kind,
            data,
            sys,
            mu,
            nu2,
            ctilde,
            d,
            w,
            info: FitInfo::plain(status, ll),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn system(&self) -> &CorrelationSystem {
        &self.sys
    }

    pub fn kernel(&self) -> &KernelSpec {
        self.sys.kernel()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu2(&self) -> f64 {
        self.nu2
    }

    pub fn ctilde(&self) -> &DVector<f64> {
        &self.ctilde
    }

    pub fn c0(&self) -> f64 {
        self.ctilde[0]
    }

    /// `d = R̃c̃ = c₀1ₙ + Rc`.
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn info(&self) -> &FitInfo {
        &self.info
    }

    pub(crate) fn info_mut(&mut self) -> &mut FitInfo {
        &mut self.info
    }

    pub fn log_likelihood(&self) -> f64 {
        self.info.log_likelihood
    }

    /// Posterior mean and variance at a unit-cube point.
    ///
    /// The jitter acts as a nugget on coincident points: at a design point
    /// the cross-correlation picks up the jittered diagonal entry, so the
    /// model interpolates exactly and the variance vanishes there.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let mut r = self.sys.cross_corr(x)?;
        let mut prior = 1.0;
        if let Some(i) = self.sys.coincident_row(x) {
            r[i] = self.sys.r()[(i, i)];
            prior = r[i];
        }
        let denom = self.c0() + r.dot(&self.ctilde.rows(1, self.data.n()));
        let mean = self.mu + r.dot(&self.w) / denom;
        let q = self.sys.whiten(&r).norm_squared();
        let variance = (self.nu2 * (prior - q) / (denom * denom)).max(0.0);
        Ok(Prediction { mean, variance })
    }

    pub fn predict_many(&self, xs: &Points) -> Result<Vec<Prediction>> {
        xs.rows().map(|x| self.predict(x)).collect()
    }

    /// `τ(x) = ν / (c₀ + r(x)ᵀc)`.
    pub fn tau(&self, x: &[f64]) -> Result<f64> {
        let r = self.sys.cross_corr(x)?;
        Ok(self.nu2.sqrt() / (self.c0() + r.dot(&self.ctilde.rows(1, self.data.n()))))
    }

    /// Posterior of `μ` under a flat prior: `N(dᵀR⁻¹diag(d)Y / dᵀR⁻¹d, ν² / dᵀR⁻¹d)`.
    pub fn posterior_mu(&self) -> Result<(f64, f64)> {
        let mean = profiled_mu(&self.d, &self.sys, self.data.y())?;
        let q = self.sys.whiten(&self.d).norm_squared();
        Ok((mean, self.nu2 / q))
    }

    /// Native-unit convenience wrapper around [`HrkFit::predict`].
    pub fn predict_native(&self, x: &[f64]) -> Result<Prediction> {
        self.predict(&self.data.scaling().to_unit(x))
    }

    pub fn to_record(&self) -> FitRecord {
        FitRecord {
            kind: self.kind,
            x: self.data.x().clone(),
            y: self.data.y().to_vec(),
            scaling: self.data.scaling().clone(),
            lengthscales: self.kernel().lengthscales().to_vec(),
            jitter: self.sys.jitter(),
            mu: self.mu,
            nu2: self.nu2,
            ctilde: self.ctilde.iter().copied().collect(),
            info: self.info.clone(),
        }
    }

    /// Rebuilds a fit from its record, refactorizing the correlation matrix.
    pub fn from_record(rec: FitRecord) -> Result<Self> {
        let data = Dataset::new(rec.x, rec.y, rec.scaling)?;
        let sys = build_system(data.x(), &KernelSpec::new(rec.lengthscales, 0.0)?)?;
        if sys.jitter() != rec.jitter {
            return Err(Error::InvalidArgument(format!(
                "refactorization needed jitter {:e}, record has {:e}",
                sys.jitter(),
                rec.jitter
            )));
        }
        let n = data.n();
        let ctilde = DVector::from_vec(rec.ctilde);
        if ctilde.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: ctilde.len(),
            });
        }
        let d = weights_to_d(&sys, &ctilde);
        let e = DVector::from_iterator(n, d.iter().zip(data.y()).map(|(a, y)| a * (y - rec.mu)));
        let w = sys.solve(&e);
        Ok(Self {
            kind: rec.kind,
            data,
            sys,
            mu: rec.mu,
            nu2: rec.nu2,
            ctilde,
            d,
            w,
            info: rec.info,
        })
    }
}

/// Serializable snapshot of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub kind: ModelKind,
    pub x: Points,
    pub y: Vec<f64>,
    pub scaling: Scaling,
    pub lengthscales: Vec<f64>,
    pub jitter: f64,
    pub mu: f64,
    pub nu2: f64,
    pub ctilde: Vec<f64>,
    pub info: FitInfo,
}

pub(crate) fn weights_to_d(sys: &CorrelationSystem, ctilde: &DVector<f64>) -> DVector<f64> {
    let n = sys.n();
    let mut d = sys.r() * ctilde.rows(1, n);
    d.add_scalar_mut(ctilde[0]);
    d
}

/// `R̃ᵀR⁻¹R̃ = [[1ᵀR⁻¹1, 1ᵀ], [1, R]]`.
pub fn rk_quadratic_form(sys: &CorrelationSystem) -> DMatrix<f64> {
    let n = sys.n();
    let ones = DVector::from_element(n, 1.0);
    let a = sys.whiten(&ones).norm_squared();
    let mut m = DMatrix::from_element(n + 1, n + 1, 1.0);
    m[(0, 0)] = a;
    m.view_mut((1, 1), (n, n)).copy_from(sys.r());
    m
}

/// Perron weights `c̃` of a factorized system.
pub fn rk_weights(sys: &CorrelationSystem) -> Result<DVector<f64>> {
    Ok(perron_with_fallback(&rk_quadratic_form(sys))?.vector)
}

pub(crate) fn ok_weights(n: usize) -> DVector<f64> {
    let mut c = DVector::zeros(n + 1);
    c[0] = 1.0;
    c
}

fn heuristic_theta(p: usize) -> f64 {
    0.5 * (p as f64).sqrt()
}

/// Runs the lengthscale search with a per-θ weight rule and returns the
/// factorized system at the best θ.
fn search_system<W>(data: &Dataset, opts: &FitOptions, weights: W) -> Result<CorrelationSystem>
where
    W: Fn(&CorrelationSystem) -> Result<DVector<f64>>,
{
    let p = data.dim();
    if let Some(theta) = &opts.fixed_theta {
        return build_system(data.x(), &KernelSpec::new(theta.clone(), 0.0)?);
    }
    if data.is_constant() {
        return build_system(data.x(), &KernelSpec::isotropic(heuristic_theta(p), p)?);
    }
    let isotropic = opts.isotropic.unwrap_or(data.n() < 3 * p);
    let free = if isotropic { 1 } else { p };
    let expand = |t: &[f64]| -> Vec<f64> {
        if isotropic {
            vec![t[0]; p]
        } else {
            t.to_vec()
        }
    };
    let first: Vec<f64> = match &opts.warm_start {
        Some(w) if w.len() == p => {
            if isotropic {
                let g = w.iter().map(|v| v.ln()).sum::<f64>() / p as f64;
                vec![g.exp()]
            } else {
                w.clone()
            }
        }
        _ => vec![heuristic_theta(p); free],
    };

    let objective = |t: &[f64]| -> f64 {
        let Ok(kernel) = KernelSpec::new(expand(t), 0.0) else {
            return f64::NEG_INFINITY;
        };
        let Ok(sys) = build_system(data.x(), &kernel) else {
            return f64::NEG_INFINITY;
        };
        let Ok(ct) = weights(&sys) else {
            return f64::NEG_INFINITY;
        };
        let d = weights_to_d(&sys, &ct);
        if d.iter().any(|v| !(*v > 0.0)) {
            return f64::NEG_INFINITY;
        }
        match profile(&d, &sys, data.y()) {
            Ok(pr) => log_likelihood_at(&d, &sys, pr.nu2),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let best = theta::maximize(free, &opts.search, &first, opts.seed, objective);
    if !best.value.is_finite() {
        return Err(Error::IllConditioned {
            jitter: crate::kernel::JITTER_CAP,
        });
    }
    let theta: Vec<f64> = best.log_theta.iter().map(|v| v.exp()).collect();
    build_system(data.x(), &KernelSpec::new(expand(&theta), 0.0)?)
}

fn status_for(data: &Dataset) -> FitStatus {
    if data.is_constant() {
        FitStatus::Degenerate
    } else {
        FitStatus::Ok
    }
}

/// Ordinary kriging with GLS mean and profile-likelihood lengthscales.
pub fn fit_ok(data: &Dataset, opts: &FitOptions) -> Result<HrkFit> {
    let n = data.n();
    let sys = search_system(data, opts, |_| Ok(ok_weights(n)))?;
    HrkFit::from_weights(ModelKind::Ok, data.clone(), sys, ok_weights(n), status_for(data))
}

/// Rational kriging: Perron weights, re-solved for every candidate θ.
pub fn fit_rk(data: &Dataset, opts: &FitOptions) -> Result<HrkFit> {
    let sys = search_system(data, opts, rk_weights)?;
    let ct = rk_weights(&sys)?;
    HrkFit::from_weights(ModelKind::Rk, data.clone(), sys, ct, status_for(data))
}

/// Dispatches on the model kind.
pub fn fit(kind: ModelKind, data: &Dataset, opts: &FitOptions) -> Result<HrkFit> {
    match kind {
        ModelKind::Ok => fit_ok(data, opts),
        ModelKind::Rk => fit_rk(data, opts),
        ModelKind::Hrk => crate::hrk::fit_hrk(data, opts),
    }
}
