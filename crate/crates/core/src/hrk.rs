//! Heteroskedastic rational kriging: weight estimation by maximizing the
//! profiled marginal likelihood over `c̃`, starting from the rational-kriging
//! solution with `θ` and `μ` held at their RK values.

use nalgebra::{DMatrix, DVector};

use crate::ccsa::{self, ConstrainedProblem, ConstraintFn, ValueGrad};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::CorrelationSystem;
use crate::models::{fit_rk, FitOptions, FitStatus, HrkFit, ModelKind};

pub use crate::likelihood::{profiled_mu, profiled_nu2};

/// Feasible set used during optimization: `cᵀc ≤ 1 - BOUNDARY_GUARD`.
pub const BOUNDARY_GUARD: f64 = 1e-8;
/// `objective_g` refuses points with `cᵀc` above `1 - FEASIBILITY_MARGIN`.
const FEASIBILITY_MARGIN: f64 = 1e-10;

/// Quantities that stay fixed while `c` varies.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    r: DMatrix<f64>,
    q: DMatrix<f64>,
    one_q_one: f64,
    rq1: DVector<f64>,
    rqr: DMatrix<f64>,
    mu_rk: f64,
}

impl ObjectiveContext {
    /// Precomputes `Q = diag(Y−μ1)R⁻¹diag(Y−μ1)`, `1ᵀQ1`, `RQ1` and `RQR`.
    pub fn new(sys: &CorrelationSystem, y: &[f64], mu_rk: f64) -> Result<Self> {
        let n = sys.n();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        let e = DVector::from_iterator(n, y.iter().map(|v| v - mu_rk));
        let rinv_e = sys.solve_matrix(&DMatrix::from_diagonal(&e));
        let mut q = DMatrix::from_fn(n, n, |i, j| e[i] * rinv_e[(i, j)]);
        q = (&q + q.transpose()) * 0.5;
        let r = sys.r().clone();
        let q1 = q.column_sum();
        let one_q_one = q1.sum();
        let rq1 = &r * &q1;
        let rq = &r * &q;
        let mut rqr = &rq * &r;
        rqr = (&rqr + rqr.transpose()) * 0.5;
        Ok(Self {
            r,
            q,
            one_q_one,
            rq1,
            rqr,
            mu_rk,
        })
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn one_q_one(&self) -> f64 {
        self.one_q_one
    }

    pub fn rq1(&self) -> &DVector<f64> {
        &self.rq1
    }

    pub fn rqr(&self) -> &DMatrix<f64> {
        &self.rqr
    }

    pub fn mu_rk(&self) -> f64 {
        self.mu_rk
    }

    fn check(&self, c: &[f64], margin: f64) -> Result<f64> {
        if c.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: c.len(),
            });
        }
        if let Some(v) = c.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InfeasiblePoint(format!("negative weight {v}")));
        }
        let norm2: f64 = c.iter().map(|v| v * v).sum();
        if norm2 > 1.0 - FEASIBILITY_MARGIN {
            return Err(Error::InfeasiblePoint(format!("c'c = {norm2} exceeds 1")));
        }
        if norm2 > 1.0 - margin {
            return Err(Error::BoundarySingularity { norm2 });
        }
        Ok(norm2)
    }

    /// Returns `(√(1−cᵀc), Rc, ν̂²(c))`.
    fn parts(&self, c: &DVector<f64>, norm2: f64) -> (f64, DVector<f64>, f64) {
        let n = self.n() as f64;
        let s = (1.0 - norm2).sqrt();
        let rc = &self.r * c;
        let quad = (1.0 - norm2) * self.one_q_one
            + 2.0 * s * c.dot(&self.rq1)
            + c.dot(&(&self.rqr * c));
        (s, rc, quad / n)
    }

    fn value(&self, c: &DVector<f64>, norm2: f64) -> Result<(f64, f64, DVector<f64>)> {
        let n = self.n() as f64;
        let (s, rc, nu2) = self.parts(c, norm2);
        let d = rc.add_scalar(s);
        if d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InfeasiblePoint("nonpositive d".into()));
        }
        let g = nu2.ln() - 2.0 / n * d.iter().map(|v| v.ln()).sum::<f64>();
        Ok((g, nu2, d))
    }

    fn value_and_gradient(&self, c: &[f64]) -> Result<(f64, Vec<f64>)> {
        let norm2 = self.check(c, BOUNDARY_GUARD)?;
        let cv = DVector::from_column_slice(c);
        let (g, nu2, d) = self.value(&cv, norm2)?;
        Ok((g, self.gradient_from(&cv, norm2, nu2, &d).iter().copied().collect()))
    }

    fn gradient_from(&self, c: &DVector<f64>, norm2: f64, nu2: f64, d: &DVector<f64>) -> DVector<f64> {
        let n = self.n() as f64;
        let s = (1.0 - norm2).sqrt();
        let c_rq1 = c.dot(&self.rq1);
        let first = &self.rqr * c + &self.rq1 * s - c * self.one_q_one - c * (c_rq1 / s);
        let inv_d = d.map(|v| 1.0 / v);
        let second = &self.r * &inv_d - c * (inv_d.sum() / s);
        first * (2.0 / (n * nu2)) - second * (2.0 / n)
    }
}

/// `g(c) = log ν̂²(c) − (2/n) Σ log dᵢ` with `d = √(1−cᵀc)·1 + Rc`.
pub fn objective_g(c: &[f64], ctx: &ObjectiveContext) -> Result<f64> {
    let norm2 = ctx.check(c, FEASIBILITY_MARGIN)?;
    Ok(ctx.value(&DVector::from_column_slice(c), norm2)?.0)
}

/// Analytic gradient of [`objective_g`]; requires `cᵀc ≤ 1 − 1e-8`.
pub fn gradient_g(c: &[f64], ctx: &ObjectiveContext) -> Result<Vec<f64>> {
    Ok(ctx.value_and_gradient(c)?.1)
}

/// Fits HRK: RK for `θ`, `μ_RK` and the start, CCSA on `g`, then
/// re-profiles `μ` and `ν²` at the final weights.
///
/// A failed weight optimization never errors; the RK weights are kept and
/// the fit is flagged [`FitStatus::Fallback`].
pub fn fit_hrk(data: &Dataset, opts: &FitOptions) -> Result<HrkFit> {
    let rk = fit_rk(data, opts)?;
    if rk.info().status == FitStatus::Degenerate {
        return HrkFit::from_weights(
            ModelKind::Hrk,
            data.clone(),
            rk.system().clone(),
            rk.ctilde().clone(),
            FitStatus::Degenerate,
        );
    }
    let n = data.n();
    let outcome = optimize_weights(&rk, opts);
    match outcome {
        Ok(w) => {
            let mut ctilde = DVector::zeros(n + 1);
            let norm2: f64 = w.c.iter().map(|v| v * v).sum();
            ctilde[0] = (1.0 - norm2).sqrt();
            ctilde.rows_mut(1, n).copy_from_slice(&w.c);
            let mut fit = HrkFit::from_weights(
                ModelKind::Hrk,
                data.clone(),
                rk.system().clone(),
                ctilde,
                FitStatus::Ok,
            )?;
            let info = fit.info_mut();
            info.g_start = Some(w.g_start);
            info.g_final = Some(w.g_final);
            info.optimizer = Some(w.status);
            info.optimizer_iterations = Some(w.iterations);
            Ok(fit)
        }
        Err(e) => {
            let mut fit = HrkFit::from_weights(
                ModelKind::Hrk,
                data.clone(),
                rk.system().clone(),
                rk.ctilde().clone(),
                FitStatus::Fallback,
            )?;
            fit.info_mut().warning = Some(format!("weight optimization failed: {e}"));
            Ok(fit)
        }
    }
}

struct Weights {
    c: Vec<f64>,
    g_start: f64,
    g_final: f64,
    status: ccsa::OptimizerStatus,
    iterations: usize,
}

/// RK weights with `c` pulled strictly inside the guarded ball.
pub fn start_weights(rk: &HrkFit) -> Vec<f64> {
    let n = rk.data().n();
    let mut c: Vec<f64> = rk.ctilde().rows(1, n).iter().map(|v| v.max(0.0)).collect();
    let norm2: f64 = c.iter().map(|v| v * v).sum();
    let cap = 1.0 - 2.0 * BOUNDARY_GUARD;
    if norm2 > cap {
        let scale = (cap / norm2).sqrt();
        c.iter_mut().for_each(|v| *v *= scale);
    }
    c
}

fn optimize_weights(rk: &HrkFit, opts: &FitOptions) -> Result<Weights> {
    let ctx = ObjectiveContext::new(rk.system(), rk.data().y(), rk.mu())?;
    let n = ctx.n();
    let start = start_weights(rk);
    let g_start = ctx.value_and_gradient(&start)?.0;
    if !g_start.is_finite() {
        return Err(Error::InvalidArgument("objective not finite at RK weights".into()));
    }
    let objective: ValueGrad<'_> = Box::new(|c: &[f64]| ctx.value_and_gradient(c));
    let ball: ConstraintFn<'_> = Box::new(|c: &[f64]| {
        (
            c.iter().map(|v| v * v).sum::<f64>() - (1.0 - BOUNDARY_GUARD),
            c.iter().map(|v| 2.0 * v).collect(),
        )
    });
    let problem = ConstrainedProblem {
        objective,
        constraints: vec![ball],
        lower: vec![0.0; n],
        upper: vec![1.0; n],
        start,
    };
    let m = ccsa::minimize(problem, opts.hrk_max_iter, opts.hrk_tol)?;
    if !(m.f <= g_start + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "optimizer increased g from {g_start} to {}",
            m.f
        )));
    }
    Ok(Weights {
        c: m.x,
        g_start,
        g_final: m.f,
        status: m.status,
        iterations: m.iterations,
    })
}
