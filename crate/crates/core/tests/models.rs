mod common;

use common::*;
use hrk_core::models::rk_quadratic_form;
use hrk_core::theta::ThetaSearch;
use hrk_core::{
    build_system, fit, fit_ok, fit_rk, FitOptions, FitStatus, HrkFit, KernelSpec, ModelKind,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

/// Well-conditioned random instance: short lengthscales, separated points.
fn conditioned(seed: u64, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let sep = 0.5 / (n as f64).powf(1.0 / p as f64);
    let x = random_points(&mut r, n, p, sep);
    let theta: Vec<f64> = (0..p).map(|_| sep * (0.5 + r.random::<f64>())).collect();
    let phase = r.random::<f64>() * 6.0;
    let y = x.iter().map(|xi| wiggle(xi, phase)).collect();
    (x, y, theta)
}

fn with_weights(kind: ModelKind, x: &[Vec<f64>], y: &[f64], theta: &[f64], ct: DVector<f64>) -> HrkFit {
    let data = dataset(x, y);
    let sys = build_system(data.x(), &KernelSpec::new(theta.to_vec(), 0.0).unwrap()).unwrap();
    HrkFit::from_weights(kind, data, sys, ct, FitStatus::Ok).unwrap()
}

fn ok_weights(n: usize) -> DVector<f64> {
    let mut c = DVector::zeros(n + 1);
    c[0] = 1.0;
    c
}

/// Random feasible weights with `c₀ > 0`.
fn random_weights(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> DVector<f64> {
    let mut c = DVector::from_fn(n + 1, |_, _| r.random::<f64>());
    c[0] += 0.1;
    let norm = c.norm();
    c / norm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn ok_reduction_matches_dense_ok(seed in any::<u64>(), n in 2usize..=20, p in 1usize..=3) {
        let (x, y, theta) = conditioned(seed, n, p);
        let f = with_weights(ModelKind::Ok, &x, &y, &theta, ok_weights(n));
        let mut r = rng(seed ^ 1);
        for _ in 0..5 {
            let at: Vec<f64> = (0..p).map(|_| r.random::<f64>()).collect();
            let (mu, nu2, mean, var) = ok_oracle(&x, &y, &theta, f.system().jitter(), &at);
            let pr = f.predict(&at).unwrap();
            prop_assert!((f.mu() - mu).abs() <= 1e-10);
            prop_assert!((f.nu2() - nu2).abs() <= 1e-10);
            prop_assert!((pr.mean - mean).abs() <= 1e-10, "mean {} vs {}", pr.mean, mean);
            prop_assert!((pr.variance - var.max(0.0)).abs() <= 1e-10);
            prop_assert!((f.tau(&at).unwrap() - nu2.sqrt()).abs() <= 1e-10);
        }
        let (pm, pv) = f.posterior_mu().unwrap();
        let ri = inverse(&dense_r(&x, &theta, f.system().jitter()));
        let one = DVector::from_element(n, 1.0);
        let a = (one.transpose() * ri * &one)[0];
        prop_assert!((pm - f.mu()).abs() <= 1e-10);
        prop_assert!((pv - f.nu2() / a).abs() <= 1e-10 * (f.nu2() / a).max(1.0));
    }

    #[test]
    fn rational_posterior_invariants(seed in any::<u64>(), n in 2usize..=15, p in 1usize..=2) {
        let (x, y, theta) = conditioned(seed, n, p);
        let mut r = rng(seed ^ 2);
        let ct = random_weights(&mut r, n);
        let f = with_weights(ModelKind::Hrk, &x, &y, &theta, ct.clone());
        let range = y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min);
        for (xi, yi) in x.iter().zip(&y) {
            let pr = f.predict(xi).unwrap();
            prop_assert!((pr.mean - yi).abs() <= 1e-6 * range);
            prop_assert!(pr.variance <= 1e-6 * f.nu2());
        }
        let ri = inverse(&dense_r(&x, &theta, f.system().jitter()));
        for _ in 0..5 {
            let at: Vec<f64> = (0..p).map(|_| r.random::<f64>()).collect();
            let pr = f.predict(&at).unwrap();
            prop_assert!(pr.variance >= 0.0);
            let rv = dense_r_vec(&x, &at, &theta);
            let tau = f.tau(&at).unwrap();
            let q = f.system().whiten(&rv).norm_squared();
            let want = tau * tau * (1.0 - q);
            prop_assert!((pr.variance - want).abs() <= 1e-10 * want.abs(),
                "variance {} vs tau identity {}", pr.variance, want);
            // Same quantity through a dense inverse.
            let qd = (rv.transpose() * &ri * &rv)[0];
            let dense = tau * tau * (1.0 - qd);
            prop_assert!((pr.variance - dense).abs() <= 1e-8 * f.nu2() / (ct[0] * ct[0]));
            // Direct rational posterior with dense inverse.
            let d = DVector::from_element(n, ct[0]) + dense_r(&x, &theta, f.system().jitter()) * ct.rows(1, n);
            let e = DVector::from_iterator(n, d.iter().zip(&y).map(|(a, b)| a * (b - f.mu())));
            let denom = ct[0] + rv.dot(&ct.rows(1, n));
            let mean = f.mu() + (rv.transpose() * &ri * e)[0] / denom;
            prop_assert!((pr.mean - mean).abs() <= 1e-8 * (1.0 + mean.abs()));
        }
        // Far field: variance tends to ν²/c₀².
        let tmax = theta.iter().cloned().fold(0.0, f64::max);
        let far: Vec<f64> = vec![1.0 + 10.0 * tmax; p];
        let pr = f.predict(&far).unwrap();
        let lim = f.nu2() / (ct[0] * ct[0]);
        prop_assert!((pr.variance - lim).abs() <= 1e-3 * lim);
    }

    #[test]
    fn fitted_rk_is_perron(seed in any::<u64>(), n in 3usize..=12) {
        let mut r = rng(seed);
        let x = random_points(&mut r, n, 1, 0.02);
        let phase = r.random::<f64>() * 6.0;
        let y: Vec<f64> = x.iter().map(|xi| wiggle(xi, phase)).collect();
        let f = fit_rk(&dataset(&x, &y), &FitOptions::with_seed(seed)).unwrap();
        let m = rk_quadratic_form(f.system());
        let v = f.ctilde();
        let lam = v.dot(&(&m * v));
        prop_assert!((&m * v - v * lam).amax() <= 1e-8 * m.amax().max(1.0));
        prop_assert!(v.min() >= -1e-12);
        prop_assert!((v.norm() - 1.0).abs() <= 1e-10);
        prop_assert!(lam >= m[(0, 0)]);
        prop_assert!(f.d().iter().all(|d| *d > 0.0));
        prop_assert!(f.nu2() > 0.0);
    }
}

#[test]
fn fit_ok_tracks_a_line() {
    let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
    let y: Vec<f64> = x.iter().map(|v| v[0]).collect();
    let f = fit_ok(&dataset(&x, &y), &FitOptions::with_seed(3)).unwrap();
    for i in 0..4 {
        let m = (i as f64 + 0.5) / 4.0;
        assert!((f.predict(&[m]).unwrap().mean - m).abs() < 1e-3);
    }
}

#[test]
fn fitted_theta_beats_random_draws() {
    let mut r = rng(11);
    let x = random_points(&mut r, 12, 2, 0.05);
    let y: Vec<f64> = x.iter().map(|xi| wiggle(xi, 0.4)).collect();
    let data = dataset(&x, &y);
    let opts = FitOptions::with_seed(5);
    let best = fit_ok(&data, &opts).unwrap();
    let s = ThetaSearch::default();
    for _ in 0..50 {
        let t: Vec<f64> = (0..2)
            .map(|_| (s.lower.ln() + r.random::<f64>() * (s.upper.ln() - s.lower.ln())).exp())
            .collect();
        let o = FitOptions {
            fixed_theta: Some(t),
            ..opts.clone()
        };
        let other = fit_ok(&data, &o).unwrap();
        assert!(best.log_likelihood() >= other.log_likelihood() - 1e-9);
    }
}

#[test]
fn constant_response_is_flat() {
    let x: Vec<Vec<f64>> = vec![vec![0.1], vec![0.5], vec![0.9]];
    for kind in [ModelKind::Ok, ModelKind::Rk, ModelKind::Hrk] {
        let f = fit(kind, &dataset(&x, &[5.0; 3]), &FitOptions::default()).unwrap();
        assert_eq!(f.info().status, FitStatus::Degenerate);
        assert_eq!(f.mu(), 5.0);
        assert!(f.nu2().abs() < 1e-12);
        assert!((f.predict(&[0.3]).unwrap().mean - 5.0).abs() < 1e-12);
        assert!((f.posterior_mu().unwrap().0 - 5.0).abs() < 1e-12);
    }
}

#[test]
fn rk_quadratic_form_dominates_ok() {
    let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
    let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).sin()).collect();
    let f = fit_rk(&dataset(&x, &y), &FitOptions::default()).unwrap();
    let m = rk_quadratic_form(f.system());
    assert!(f.ctilde().dot(&(&m * f.ctilde())) >= m[(0, 0)]);
}

#[test]
fn record_round_trip_preserves_predictions() {
    let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
    let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).cos()).collect();
    let f = fit(ModelKind::Hrk, &dataset(&x, &y), &FitOptions::default()).unwrap();
    let g = HrkFit::from_record(f.to_record()).unwrap();
    for t in [0.05, 0.33, 0.71] {
        let (a, b) = (f.predict(&[t]).unwrap(), g.predict(&[t]).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.variance.to_bits(), b.variance.to_bits());
    }
}
