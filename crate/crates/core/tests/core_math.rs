mod common;

use common::*;
use hrk_core::kernel::{JITTER_CAP, JITTER_START};
use hrk_core::models::rk_quadratic_form;
use hrk_core::perron::perron_eigenvector;
use hrk_core::{build_system, cross_corr, gaussian_correlation, solve_spd, Error, KernelSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn instance(seed: u64, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let x = random_points(&mut r, n, p, 0.02);
    let theta = (0..p).map(|_| 0.05 + 0.5 * r.random::<f64>()).collect();
    (x, theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_matrix_matches_kernel(seed in any::<u64>(), n in 2usize..25, p in 1usize..4) {
        let (x, theta) = instance(seed, n, p);
        let k = KernelSpec::new(theta.clone(), 0.0).unwrap();
        let sys = build_system(&to_points(&x), &k).unwrap();
        let j = sys.jitter();
        prop_assert!((JITTER_START..=JITTER_CAP).contains(&j));
        for i in 0..n {
            for m in 0..n {
                let want = gauss(&x[i], &x[m], &theta) + if i == m { j } else { 0.0 };
                prop_assert!((sys.r()[(i, m)] - want).abs() <= 1e-14);
                let g = gaussian_correlation(&x[i], &x[m], &k).unwrap();
                prop_assert!((g - gauss(&x[i], &x[m], &theta)).abs() <= 1e-14);
            }
            prop_assert_eq!(sys.r()[(i, i)], 1.0 + j);
        }
        prop_assert!((sys.r() - sys.r().transpose()).amax() <= 1e-12);
        let l = sys.chol_factor();
        prop_assert!((l * l.transpose() - sys.r()).amax() <= 1e-8);
        let rt = sys.rtilde();
        prop_assert_eq!(rt.ncols(), n + 1);
        prop_assert!(rt.column(0).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn cross_corr_matches_kernel(seed in any::<u64>(), n in 1usize..15, p in 1usize..4) {
        let (x, theta) = instance(seed, n + 1, p);
        let k = KernelSpec::new(theta.clone(), 0.0).unwrap();
        let r = cross_corr(&x[n], &to_points(&x[..n]), &k).unwrap();
        for i in 0..n {
            prop_assert!((r[i] - gauss(&x[n], &x[i], &theta)).abs() <= 1e-15);
        }
    }

    #[test]
    fn solve_matches_dense_inverse(seed in any::<u64>(), n in 2usize..=20, p in 1usize..4) {
        let (x, theta) = instance(seed, n, p);
        let sys = build_system(&to_points(&x), &KernelSpec::new(theta.clone(), 0.0).unwrap()).unwrap();
        let mut r = rng(seed ^ 0x5eed);
        let b = DVector::from_fn(n, |_, _| r.random::<f64>() * 2.0 - 1.0);
        let z = solve_spd(&sys, &b).unwrap();
        let resid = (sys.r() * &z - &b).amax();
        // Normwise backward error holds at any conditioning.
        prop_assert!(resid <= 1e-12 * (sys.r().amax() * n as f64 * z.amax() + b.amax()));
        // Forward accuracy and the dense-inverse oracle need a well-conditioned R.
        let rd = dense_r(&x, &theta, sys.jitter());
        let eig = rd.clone().symmetric_eigen().eigenvalues;
        if eig.max() / eig.min() <= 1e6 {
            prop_assert!(resid <= 1e-8 * b.amax());
            let dense = inverse(&rd) * &b;
            let scale = dense.amax().max(1.0);
            prop_assert!((&z - &dense).amax() <= 1e-8 * scale, "diff {}", (&z - &dense).amax());
        }
    }

    #[test]
    fn perron_residual_and_optimality(seed in any::<u64>(), n in 1usize..12, p in 1usize..3) {
        let (x, theta) = instance(seed, n, p);
        let sys = build_system(&to_points(&x), &KernelSpec::new(theta, 0.0).unwrap()).unwrap();
        let m = rk_quadratic_form(&sys);
        let v = perron_eigenvector(&m).unwrap().vector;
        let lam = v.dot(&(&m * &v));
        let scale = m.amax().max(1.0);
        prop_assert!((&m * &v - &v * lam).amax() <= 1e-8 * scale);
        prop_assert!(v.min() >= -1e-12);
        prop_assert!((v.norm() - 1.0).abs() <= 1e-10);
        let mut r = rng(seed.wrapping_add(7));
        for _ in 0..1000 {
            let mut u = DVector::from_fn(n + 1, |_, _| r.random::<f64>());
            u /= u.norm();
            prop_assert!(u.dot(&(&m * &u)) <= lam * (1.0 + 1e-12));
        }
    }
}

#[test]
fn kernel_examples() {
    let k = KernelSpec::new(vec![0.3], 0.0).unwrap();
    assert!((gaussian_correlation(&[0.0], &[0.3], &k).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    let k2 = KernelSpec::new(vec![0.2, 0.4], 0.0).unwrap();
    let v = gaussian_correlation(&[0.0, 0.0], &[0.2, 0.4], &k2).unwrap();
    assert!((v - 0.1353352832366127).abs() < 1e-15);
    assert!(matches!(
        gaussian_correlation(&[0.0], &[0.0, 1.0], &k),
        Err(Error::DimensionMismatch { .. }) | Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn build_system_examples() {
    let k = KernelSpec::new(vec![0.01], 0.0).unwrap();
    let sys = build_system(&to_points(&[vec![0.0], vec![1.0]]), &k).unwrap();
    assert!(sys.r()[(0, 1)] < 1e-6);
    let k = KernelSpec::new(vec![0.25], 0.0).unwrap();
    let sys = build_system(&to_points(&[vec![0.1], vec![0.35]]), &k).unwrap();
    assert!((sys.r()[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
    let dup = build_system(&to_points(&[vec![0.5], vec![0.5 + 1e-12]]), &k);
    assert!(matches!(dup, Err(Error::DuplicatePoint { .. })));
}

#[test]
fn solve_spd_examples() {
    let k = KernelSpec::new(vec![0.01], 0.0).unwrap();
    let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
    let sys = build_system(&to_points(&x), &k).unwrap();
    let b = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5, 7.0]);
    assert!((solve_spd(&sys, &b).unwrap() - &b).amax() < 1e-8);

    let k = KernelSpec::new(vec![0.3], 0.0).unwrap();
    let sys = build_system(&to_points(&x), &k).unwrap();
    for i in 0..5 {
        let z = solve_spd(&sys, &sys.r().column(i).into_owned()).unwrap();
        let mut e = DVector::zeros(5);
        e[i] = 1.0;
        assert!((z - e).amax() < 1e-8);
    }
    let m = sys.solve_matrix(&DMatrix::identity(5, 5));
    assert!((sys.r() * m - DMatrix::identity(5, 5)).amax() < 1e-8);
}

#[test]
fn perron_hand_cases() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = perron_eigenvector(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
    assert!((v.vector[0] - s).abs() < 1e-10 && (v.vector[1] - s).abs() < 1e-10);
    assert!((v.value - 2.0).abs() < 1e-10);
    let v = perron_eigenvector(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
    assert!((v.value - 3.0).abs() < 1e-10);
    let v = perron_eigenvector(&DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0])).unwrap();
    assert!((v.vector[0] - 1.0).abs() < 1e-10 && v.vector[1].abs() < 1e-10);
}
