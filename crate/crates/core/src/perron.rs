//! Dominant (Perron) eigenpair of a symmetric nonnegative matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub const PERRON_TOL: f64 = 1e-10;
pub const PERRON_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct PerronPair {
    pub vector: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Power iteration from the uniform vector.
///
/// The iterate stays in the nonnegative orthant because `M ≥ 0`. Convergence
/// is declared when successive unit iterates differ by at most
/// [`PERRON_TOL`] in the max norm.
pub fn perron_eigenvector(m: &DMatrix<f64>) -> Result<PerronPair> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(v) = m.iter().find(|v| **v < -1e-12 || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "matrix entry {v} is negative or not finite"
        )));
    }

    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut next = DVector::zeros(n);
    for it in 1..=PERRON_MAX_ITER {
        next.gemv(1.0, m, &v, 0.0);
        let norm = next.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("matrix annihilates the start vector".into()));
        }
        next /= norm;
        let change = (&next - &v).amax();
        std::mem::swap(&mut v, &mut next);
        if change <= PERRON_TOL {
            let value = v.dot(&(m * &v));
            return Ok(PerronPair {
                vector: fix_sign(v),
                value,
                iterations: it,
            });
        }
    }
    Err(Error::IterationLimit {
        iterations: PERRON_MAX_ITER,
        last: v.iter().copied().collect(),
    })
}

/// Perron pair from a full symmetric eigendecomposition; used when power
/// iteration does not converge.
pub fn perron_by_eigendecomposition(m: &DMatrix<f64>) -> PerronPair {
    let eig = SymmetricEigen::new(m.clone());
    let (imax, value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
    let v = eig.eigenvectors.column(imax).into_owned();
    // Clip rounding noise below zero.
    let mut v = fix_sign(v).map(|x| x.max(0.0));
    let norm = v.norm();
    v /= norm;
    PerronPair {
        vector: v,
        value,
        iterations: 0,
    }
}

/// Power iteration, falling back to the eigensolver on non-convergence.
pub fn perron_with_fallback(m: &DMatrix<f64>) -> Result<PerronPair> {
    match perron_eigenvector(m) {
        Ok(p) => Ok(p),
        Err(Error::IterationLimit { .. }) => Ok(perron_by_eigendecomposition(m)),
        Err(e) => Err(e),
    }
}

fn fix_sign(v: DVector<f64>) -> DVector<f64> {
    if v.sum() < 0.0 {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn two_by_two_cases() {
        let p = perron_eigenvector(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!((p.vector[0] - S).abs() < 1e-12 && (p.vector[1] - S).abs() < 1e-12);
        assert!((p.value - 2.0).abs() < 1e-12);

        let p = perron_eigenvector(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((p.vector[0] - S).abs() < 1e-12 && (p.vector[1] - S).abs() < 1e-12);
        assert!((p.value - 3.0).abs() < 1e-12);

        let p = perron_eigenvector(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        assert!((p.vector[0] - 1.0).abs() < 1e-9 && p.vector[1].abs() < 1e-9);
        assert!((p.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_entries() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]);
        assert!(matches!(perron_eigenvector(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn eigendecomposition_agrees_with_power_iteration() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let a = perron_eigenvector(&m).unwrap();
        let b = perron_by_eigendecomposition(&m);
        assert!((a.vector - b.vector).amax() < 1e-8);
        assert!((a.value - b.value).abs() < 1e-8);
    }

    #[test]
    fn slow_gap_hits_iteration_limit() {
        // Nearly equal dominant eigenvalues; uniform start is not an eigenvector.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1e-9, 1e-9, 1.0 - 1e-9]);
        match perron_eigenvector(&m) {
            Err(Error::IterationLimit { iterations, last }) => {
                assert_eq!(iterations, PERRON_MAX_ITER);
                assert_eq!(last.len(), 2);
            }
            other => panic!("expected iteration limit, got {other:?}"),
        }
        let p = perron_with_fallback(&m).unwrap();
        assert!((p.vector.norm() - 1.0).abs() < 1e-12);
    }
}
