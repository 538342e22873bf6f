//! Lengthscale search: multi-start Nelder–Mead on log θ inside a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bounds and budget of the lengthscale search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSearch {
    pub lower: f64,
    pub upper: f64,
    /// Total number of starts, including the heuristic or warm start.
    pub starts: usize,
    /// Simplex-size tolerance in log θ.
    pub tol: f64,
    /// Objective evaluations allowed per start and per free parameter.
    pub evals_per_dim: usize,
}

impl Default for ThetaSearch {
    fn default() -> Self {
        Self {
            lower: 0.05,
            upper: 10.0,
            starts: 5,
            tol: 1e-4,
            evals_per_dim: 200,
        }
    }
}

/// Result of [`maximize`]: best free parameters and their objective value.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub log_theta: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Maximizes `objective` over `dim` log-lengthscales.
///
/// `first_start` (in θ units) replaces the heuristic start when given; the
/// remaining starts are drawn uniformly in the log box from `seed`.
pub fn maximize<F>(
    dim: usize,
    search: &ThetaSearch,
    first_start: &[f64],
    seed: u64,
    mut objective: F,
) -> SearchResult
where
    F: FnMut(&[f64]) -> f64,
{
    let lo = search.lower.ln();
    let hi = search.upper.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![first_start.iter().map(|t| t.ln().clamp(lo, hi)).collect::<Vec<_>>()];
    for _ in 1..search.starts.max(1) {
        starts.push((0..dim).map(|_| rng.random_range(lo..hi)).collect());
    }

    let mut best = SearchResult {
        log_theta: starts[0].clone(),
        value: f64::NEG_INFINITY,
        evaluations: 0,
    };
    let max_evals = search.evals_per_dim * dim.max(1);
    for s in starts {
        let (x, f, evals) = nelder_mead(&s, lo, hi, search.tol, max_evals, |z| {
            let v = objective(&z.iter().map(|t| t.exp()).collect::<Vec<_>>());
            if v.is_nan() {
                f64::INFINITY
            } else {
                -v
            }
        });
        best.evaluations += evals;
        if -f > best.value {
            best.value = -f;
            best.log_theta = x;
        }
    }
    best
}

/// Box-constrained Nelder–Mead minimization by projection onto the box.
fn nelder_mead<F>(
    start: &[f64],
    lo: f64,
    hi: f64,
    tol: f64,
    max_evals: usize,
    mut f: F,
) -> (Vec<f64>, f64, usize)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let clamp = |v: Vec<f64>| v.into_iter().map(|z| z.clamp(lo, hi)).collect::<Vec<_>>();
    let step = 0.25 * (hi - lo);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let x0 = clamp(start.to_vec());
    let f0 = f(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = n + 1;

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if size < tol || evals >= max_evals {
            break;
        }

        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| {
            clamp(
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };

        let xr = toward(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = toward(2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = toward(0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = toward(-0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = clamp(best.iter().zip(&v.0).map(|(b, x)| b + 0.5 * (x - b)).collect());
            let fx = f(&x);
            *v = (x, fx);
        }
        evals += n;
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let target = [0.3f64, 2.0];
        let res = maximize(2, &ThetaSearch::default(), &[1.0, 1.0], 7, |t| {
            -t.iter()
                .zip(&target)
                .map(|(a, b)| (a.ln() - b.ln()).powi(2))
                .sum::<f64>()
        });
        for (lt, t) in res.log_theta.iter().zip(&target) {
            assert!((lt - t.ln()).abs() < 1e-3);
        }
    }

    #[test]
    fn respects_box() {
        let s = ThetaSearch::default();
        let res = maximize(1, &s, &[1.0], 1, |t| t[0]);
        assert!((res.log_theta[0] - s.upper.ln()).abs() < 1e-3);
        let res = maximize(1, &s, &[1.0], 1, |t| -t[0]);
        assert!((res.log_theta[0] - s.lower.ln()).abs() < 1e-3);
    }

    #[test]
    fn deterministic_given_seed() {
        let obj = |t: &[f64]| -(t[0] - 0.7).powi(2) - (t[1] - 0.2).powi(2) + (5.0 * t[0]).sin() * 0.1;
        let a = maximize(2, &ThetaSearch::default(), &[0.5, 0.5], 3, obj);
        let b = maximize(2, &ThetaSearch::default(), &[0.5, 0.5], 3, obj);
        assert_eq!(a.log_theta, b.log_theta);
    }
}
