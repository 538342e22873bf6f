//! Dense reference implementations used as oracles. They share nothing with
//! the library beyond the input types.
#![allow(dead_code)]

use hrk_core::{Dataset, Points, Scaling};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(u: &[f64], v: &[f64], theta: &[f64]) -> f64 {
    let mut s = 0.0;
    for l in 0..u.len() {
        let t = (u[l] - v[l]) / theta[l];
        s += t * t;
    }
    (-s).exp()
}

pub fn dense_r(x: &[Vec<f64>], theta: &[f64], jitter: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| gauss(&x[i], &x[j], theta) + if i == j { jitter } else { 0.0 })
}

pub fn dense_r_vec(x: &[Vec<f64>], at: &[f64], theta: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().map(|xi| gauss(at, xi, theta)))
}

pub fn inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("oracle inverse")
}

/// Random points in the unit cube, at least `min_sep` apart.
pub fn random_points(r: &mut ChaCha8Rng, n: usize, p: usize, min_sep: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let c: Vec<f64> = (0..p).map(|_| r.random::<f64>()).collect();
        let ok = out.iter().all(|o| {
            o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= min_sep
        });
        if ok {
            out.push(c);
        }
    }
    out
}

pub fn to_points(x: &[Vec<f64>]) -> Points {
    Points::from_rows(x).unwrap()
}

pub fn dataset(x: &[Vec<f64>], y: &[f64]) -> Dataset {
    Dataset::new(to_points(x), y.to_vec(), Scaling::unit(x[0].len())).unwrap()
}

/// Smooth but non-trivial response for synthetic instances.
pub fn wiggle(x: &[f64], phase: f64) -> f64 {
    x.iter()
        .enumerate()
        .map(|(l, v)| ((l as f64 + 2.0) * v + phase).sin() + 0.3 * v * v)
        .sum()
}

/// Ordinary kriging with dense inverses: returns `(μ, ν², mean, variance)`.
pub fn ok_oracle(
    x: &[Vec<f64>],
    y: &[f64],
    theta: &[f64],
    jitter: f64,
    at: &[f64],
) -> (f64, f64, f64, f64) {
    let n = x.len();
    let ri = inverse(&dense_r(x, theta, jitter));
    let one = DVector::from_element(n, 1.0);
    let yv = DVector::from_column_slice(y);
    let mu = (one.transpose() * &ri * &yv)[0] / (one.transpose() * &ri * &one)[0];
    let e = &yv - &one * mu;
    let nu2 = (e.transpose() * &ri * &e)[0] / n as f64;
    let r = dense_r_vec(x, at, theta);
    let mean = mu + (r.transpose() * &ri * &e)[0];
    let var = nu2 * (1.0 - (r.transpose() * &ri * &r)[0]);
    (mu, nu2, mean, var)
}

/// Full Gaussian log-likelihood of `Y ~ N(μ1, ν² D⁻¹RD⁻¹)` with dense
/// determinant and inverse.
pub fn full_log_likelihood(r: &DMatrix<f64>, d: &DVector<f64>, y: &[f64], mu: f64, nu2: f64) -> f64 {
    let n = y.len();
    let dinv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
    let cov = &dinv * r * &dinv * nu2;
    let e = DVector::from_iterator(n, y.iter().map(|v| v - mu));
    let quad = (e.transpose() * inverse(&cov) * &e)[0];
    -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * cov.determinant().ln() - 0.5 * quad
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        num += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma).powi(2);
        vb += (rb[i] - mb).powi(2);
    }
    num / (va * vb).sqrt()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
