//! Ordinary, rational and heteroskedastic rational kriging (OK, RK, HRK)
//! for deterministic computer experiments, with ALM active learning.
//!
//! All models use the Gaussian correlation on inputs scaled to `[0,1]^p`
//! and share the rational posterior
//!
//! ```text
//! ŷ(x)  = μ + r(x)ᵀR⁻¹diag(d)(Y − μ1) / (c₀ + r(x)ᵀc)
//! s²(x) = ν²(1 − r(x)ᵀR⁻¹r(x)) / (c₀ + r(x)ᵀc)²,    d = c₀1 + Rc
//! ```
//!
//! with `c̃ = (c₀, c)` on the nonnegative unit sphere.

pub mod active;
pub mod ccsa;
pub mod dataset;
pub mod design;
pub mod error;
pub mod functions;
pub mod hrk;
pub mod kernel;
pub mod likelihood;
pub mod metrics;
pub mod models;
pub mod perron;
pub mod points;
pub mod seed;
pub mod theta;

pub use active::{alm_select, run_active_learning, AlConfig, AlStep, AlTrace, InitialDesign, Problem};
pub use dataset::{Dataset, Scaling};
pub use design::{candidate_set, downsample, random_lhd, Design, Provenance};
pub use error::{Error, Result};
pub use functions::{gramacy_lee, oscillator, standard_suite, TestFunction};
pub use hrk::{fit_hrk, gradient_g, objective_g, ObjectiveContext};
pub use kernel::{build_system, cross_corr, gaussian_correlation, solve_spd, CorrelationSystem, KernelSpec};
pub use likelihood::{profiled_mu, profiled_nu2};
pub use metrics::{interval_score, rmse};
pub use models::{fit, fit_ok, fit_rk, FitInfo, FitOptions, FitRecord, FitStatus, HrkFit, ModelKind, Prediction};
pub use perron::perron_eigenvector;
pub use points::Points;
