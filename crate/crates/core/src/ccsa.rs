//! Conservative convex separable approximation (CCSA) minimizer.
//!
//! Each outer iteration minimizes separable quadratic models
//! `f̃ᵢ(x) = fᵢ(xₖ) + ∇fᵢ(xₖ)ᵀΔ + (ρᵢ/2) Σⱼ (Δⱼ/σⱼ)²`
//! of the objective and every constraint inside the trust box `|Δⱼ| ≤ σⱼ`.
//! The subproblem is solved through its concave dual in the multipliers.
//! Inner iterations raise `ρᵢ` until every model is conservative at the
//! trial point, i.e. it overestimates the true function there; the accepted
//! iterate is then feasible and has an objective no larger than the previous one.
//! The objective is only evaluated at points that satisfy every constraint.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RHO_MIN: f64 = 1e-5;

pub type ValueGrad<'a> = Box<dyn FnMut(&[f64]) -> Result<(f64, Vec<f64>)> + 'a>;
pub type ConstraintFn<'a> = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a>;

/// `min f(x)` subject to `gⱼ(x) ≤ 0` and `lower ≤ x ≤ upper`.
pub struct ConstrainedProblem<'a> {
    pub objective: ValueGrad<'a>,
    pub constraints: Vec<ConstraintFn<'a>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub start: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerStatus {
    Converged,
    IterationLimit,
    Stalled,
}

impl fmt::Display for OptimizerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerStatus::Converged => "converged",
            OptimizerStatus::IterationLimit => "iteration_limit",
            OptimizerStatus::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop when `|Δf|` falls below this.
    pub ftol: f64,
    /// Stop when `‖Δx‖∞` falls below this.
    pub xtol: f64,
    pub max_inner: usize,
    pub stall_iters: usize,
    pub stall_tol: f64,
}

impl MinimizeOptions {
    pub fn new(max_iter: usize, tol: f64) -> Self {
        Self {
            max_iter,
            ftol: tol,
            xtol: tol,
            max_inner: 50,
            stall_iters: 10,
            stall_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub status: OptimizerStatus,
    pub iterations: usize,
    /// Objective value after each accepted outer iteration, starting with `f(x₀)`.
    pub history: Vec<f64>,
}

/// Runs CCSA from a feasible start with `budget` outer iterations.
pub fn minimize(p: ConstrainedProblem<'_>, budget: usize, tol: f64) -> Result<Minimum> {
    minimize_with(p, &MinimizeOptions::new(budget, tol))
}

pub fn minimize_with(mut p: ConstrainedProblem<'_>, opts: &MinimizeOptions) -> Result<Minimum> {
    let n = p.start.len();
    if p.lower.len() != n || p.upper.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.lower.len().min(p.upper.len()),
        });
    }
    for j in 0..n {
        let (lo, hi, x) = (p.lower[j], p.upper[j], p.start[j]);
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("bad bounds [{lo}, {hi}] in coordinate {j}")));
        }
        if !(lo <= x && x <= hi) {
            return Err(Error::InvalidArgument(format!(
                "start coordinate {j} = {x} outside [{lo}, {hi}]"
            )));
        }
    }
    let mut x = p.start.clone();
    let mut cons: Vec<(f64, Vec<f64>)> = p.constraints.iter().map(|c| c(&x)).collect();
    if let Some((i, (v, _))) = cons.iter().enumerate().find(|(_, (v, _))| !(*v <= 0.0)) {
        return Err(Error::InvalidArgument(format!("start violates constraint {i} ({v:e} > 0)")));
    }
    let (mut f, mut grad) = (p.objective)(&x)?;
    if !f.is_finite() {
        return Err(Error::InvalidArgument("objective is not finite at the start".into()));
    }

    let m = cons.len();
    let width: Vec<f64> = p.lower.iter().zip(&p.upper).map(|(l, u)| u - l).collect();
    let mut sigma: Vec<f64> = width.iter().map(|w| 0.5 * w).collect();
    let initial_rho = |g: &[f64]| -> f64 {
        let s: f64 = g.iter().zip(&width).map(|(gj, w)| gj.abs() * w).sum();
        (0.1 * s / n.max(1) as f64).max(RHO_MIN)
    };
    let mut rho0 = initial_rho(&grad);
    let mut rho: Vec<f64> = cons.iter().map(|(_, g)| initial_rho(g)).collect();

    let mut history = vec![f];
    let mut prev: Option<Vec<f64>> = None;
    let mut quiet = 0usize;

    for iter in 1..=opts.max_iter {
        let lo: Vec<f64> = (0..n).map(|j| (p.lower[j] - x[j]).max(-sigma[j])).collect();
        let hi: Vec<f64> = (0..n).map(|j| (p.upper[j] - x[j]).min(sigma[j])).collect();

        let mut accepted = None;
        for _ in 0..opts.max_inner {
            let sub = Subproblem {
                grad: &grad,
                cons: &cons,
                rho0,
                rho: &rho,
                sigma: &sigma,
                lo: &lo,
                hi: &hi,
            };
            let step = sub.solve();
            let approx_c: Vec<f64> = (0..m).map(|i| sub.model(&cons[i], rho[i], &step)).collect();
            let approx_f = sub.model(&(f, grad.clone()), rho0, &step);
            if step.iter().all(|v| *v == 0.0) {
                return Ok(Minimum {
                    x,
                    f,
                    status: OptimizerStatus::Converged,
                    iterations: iter - 1,
                    history,
                });
            }
            let trial: Vec<f64> = (0..n)
                .map(|j| (x[j] + step[j]).clamp(p.lower[j], p.upper[j]))
                .collect();
            let wsum = 0.5
                * step
                    .iter()
                    .zip(&sigma)
                    .map(|(d, s)| if *s > 0.0 { (d / s) * (d / s) } else { 0.0 })
                    .sum::<f64>();

            let mut ok = true;
            let mut trial_cons = Vec::with_capacity(m);
            for i in 0..m {
                let (cv, cg) = (p.constraints[i])(&trial);
                let approx = approx_c[i];
                if cv > approx || cv > 0.0 {
                    ok = false;
                    rho[i] = raise_rho(rho[i], cv - approx, wsum);
                }
                trial_cons.push((cv, cg));
            }
            if !ok {
                continue;
            }
            let (fv, fg) = (p.objective)(&trial)?;
            let approx = approx_f;
            if !fv.is_finite() || fv > approx {
                let gap = if fv.is_finite() { fv - approx } else { f64::INFINITY };
                rho0 = raise_rho(rho0, gap, wsum);
                continue;
            }
            accepted = Some((trial, fv, fg, trial_cons));
            break;
        }

        let Some((xn, fv, fg, cn)) = accepted else {
            return Ok(Minimum {
                x,
                f,
                status: OptimizerStatus::Stalled,
                iterations: iter,
                history,
            });
        };

        let df = f - fv;
        let dx = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

        if let Some(xp) = &prev {
            for j in 0..n {
                let s = (xn[j] - x[j]) * (x[j] - xp[j]);
                if s < 0.0 {
                    sigma[j] *= 0.7;
                } else if s > 0.0 {
                    sigma[j] *= 1.2;
                }
                sigma[j] = sigma[j].clamp(1e-8 * width[j], 10.0 * width[j]);
            }
        }
        rho0 = (0.1 * rho0).max(RHO_MIN);
        for r in rho.iter_mut() {
            *r = (0.1 * *r).max(RHO_MIN);
        }
        prev = Some(std::mem::replace(&mut x, xn));
        f = fv;
        grad = fg;
        cons = cn;
        history.push(f);

        if df.abs() < opts.ftol || dx < opts.xtol {
            return Ok(Minimum {
                x,
                f,
                status: OptimizerStatus::Converged,
                iterations: iter,
                history,
            });
        }
        quiet = if df.abs() < opts.stall_tol { quiet + 1 } else { 0 };
        if quiet >= opts.stall_iters {
            return Ok(Minimum {
                x,
                f,
                status: OptimizerStatus::Stalled,
                iterations: iter,
                history,
            });
        }
    }
    Ok(Minimum {
        x,
        f,
        status: OptimizerStatus::IterationLimit,
        iterations: opts.max_iter,
        history,
    })
}

fn raise_rho(rho: f64, gap: f64, wsum: f64) -> f64 {
    if gap > 0.0 && wsum > 0.0 && gap.is_finite() {
        (10.0 * rho).min(1.1 * (rho + gap / wsum))
    } else if gap.is_finite() {
        2.0 * rho
    } else {
        10.0 * rho
    }
}

struct Subproblem<'s> {
    grad: &'s [f64],
    cons: &'s [(f64, Vec<f64>)],
    rho0: f64,
    rho: &'s [f64],
    sigma: &'s [f64],
    lo: &'s [f64],
    hi: &'s [f64],
}

impl Subproblem<'_> {
    fn model(&self, fg: &(f64, Vec<f64>), rho: f64, step: &[f64]) -> f64 {
        let mut v = fg.0;
        for j in 0..step.len() {
            v += fg.1[j] * step[j];
            if self.sigma[j] > 0.0 {
                let z = step[j] / self.sigma[j];
                v += 0.5 * rho * z * z;
            }
        }
        v
    }

    /// Minimizer of the Lagrangian for fixed multipliers `y`.
    fn primal(&self, y: &[f64]) -> Vec<f64> {
        let a = self.rho0 + y.iter().zip(self.rho).map(|(yi, r)| yi * r).sum::<f64>();
        (0..self.grad.len())
            .map(|j| {
                let mut b = self.grad[j];
                for (yi, (_, g)) in y.iter().zip(self.cons) {
                    b += yi * g[j];
                }
                let s2 = self.sigma[j] * self.sigma[j];
                (-b * s2 / a).clamp(self.lo[j], self.hi[j])
            })
            .collect()
    }

    fn violation(&self, i: usize, y: &[f64]) -> f64 {
        let step = self.primal(y);
        self.model(&self.cons[i], self.rho[i], &step)
    }

    /// Maximizes the concave dual by cyclic one-dimensional root finding on
    /// its partial derivatives `f̃ᵢ(x(y))`.
    fn solve(&self) -> Vec<f64> {
        let m = self.cons.len();
        let mut y = vec![0.0; m];
        if m == 0 {
            return self.primal(&y);
        }
        for _sweep in 0..if m == 1 { 1 } else { 50 } {
            let mut change = 0.0f64;
            for i in 0..m {
                let old = y[i];
                y[i] = 0.0;
                if self.violation(i, &y) > 0.0 {
                    let mut hi = 1.0;
                    let mut probe = y.clone();
                    probe[i] = hi;
                    while self.violation(i, &probe) > 0.0 && hi < 1e30 {
                        hi *= 4.0;
                        probe[i] = hi;
                    }
                    let mut lo = 0.0;
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        probe[i] = mid;
                        if self.violation(i, &probe) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    y[i] = hi;
                }
                change = change.max((y[i] - old).abs() / (1.0 + old.abs()));
            }
            if change < 1e-12 {
                break;
            }
        }
        self.primal(&y)
    }
}
