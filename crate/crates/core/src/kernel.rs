//! Gaussian correlation kernel and the factorized correlation system it induces.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{sq_dist, Points};

/// First jitter tried when factorizing a correlation matrix.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter the escalation will reach before giving up.
pub const JITTER_CAP: f64 = 1e-4;
/// Two design rows closer than this are treated as the same point.
pub const DUPLICATE_RADIUS: f64 = 1e-10;

/// Anisotropic Gaussian-correlation lengthscales plus diagonal jitter.
///
/// Lengthscales are expressed on the unit-cube scale of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    lengthscales: Vec<f64>,
    jitter: f64,
}

impl KernelSpec {
    pub fn new(lengthscales: Vec<f64>, jitter: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::InvalidArgument("no lengthscales".into()));
        }
        if let Some(t) = lengthscales.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "lengthscale {t} is not positive"
            )));
        }
        if !(0.0..=JITTER_CAP).contains(&jitter) {
            return Err(Error::InvalidArgument(format!(
                "jitter {jitter:e} outside [0, {JITTER_CAP:e}]"
            )));
        }
        Ok(Self {
            lengthscales,
            jitter,
        })
    }

    pub fn isotropic(theta: f64, dim: usize) -> Result<Self> {
        Self::new(vec![theta; dim], 0.0)
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub(crate) fn with_jitter(&self, jitter: f64) -> Self {
        Self {
            lengthscales: self.lengthscales.clone(),
            jitter,
        }
    }

    #[inline]
    fn corr_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        let s: f64 = u
            .iter()
            .zip(v)
            .zip(&self.lengthscales)
            .map(|((a, b), t)| {
                let z = (a - b) / t;
                z * z
            })
            .sum();
        (-s).exp()
    }
}

/// `R(u, v) = exp(-Σ (u_l - v_l)² / θ_l²)`.
pub fn gaussian_correlation(u: &[f64], v: &[f64], k: &KernelSpec) -> Result<f64> {
    check_dim(u.len(), k.dim())?;
    check_dim(v.len(), k.dim())?;
    Ok(k.corr_unchecked(u, v))
}

/// Correlations between `x` and every row of `design`.
pub fn cross_corr(x: &[f64], design: &Points, k: &KernelSpec) -> Result<DVector<f64>> {
    check_dim(x.len(), k.dim())?;
    check_dim(design.dim(), k.dim())?;
    Ok(DVector::from_iterator(
        design.len(),
        design.rows().map(|row| k.corr_unchecked(x, row)),
    ))
}

fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Correlation matrix of a design together with its Cholesky factor.
///
/// Immutable once built. The kernel stored here carries the jitter that was
/// actually needed for the factorization to succeed.
#[derive(Debug, Clone)]
pub struct CorrelationSystem {
    design: Points,
    kernel: KernelSpec,
    r: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    lower: DMatrix<f64>,
}

impl CorrelationSystem {
    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn design(&self) -> &Points {
        &self.design
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn jitter(&self) -> f64 {
        self.kernel.jitter
    }

    /// The jittered correlation matrix.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Lower-triangular `L` with `L Lᵀ = R`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// `[1ₙ, R]`, an `n × (n+1)` matrix.
    pub fn rtilde(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::from_element(n, n + 1, 1.0);
        m.columns_mut(1, n).copy_from(&self.r);
        m
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `L⁻¹ b`, so that `bᵀR⁻¹b = ‖L⁻¹b‖²`.
    pub fn whiten(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `log |R|`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn cross_corr(&self, x: &[f64]) -> Result<DVector<f64>> {
        cross_corr(x, &self.design, &self.kernel)
    }

    /// Index of the design row within [`DUPLICATE_RADIUS`] of `x`, if any.
    pub fn coincident_row(&self, x: &[f64]) -> Option<usize> {
        let r2 = DUPLICATE_RADIUS * DUPLICATE_RADIUS;
        self.design.rows().position(|row| sq_dist(row, x) <= r2)
    }
}

/// Builds and factorizes the correlation matrix of `design`.
///
/// The jitter in `k` is ignored; jitter starts at [`JITTER_START`] and grows
/// tenfold until the Cholesky factorization succeeds or [`JITTER_CAP`] is
/// exceeded.
pub fn build_system(design: &Points, k: &KernelSpec) -> Result<CorrelationSystem> {
    check_dim(design.dim(), k.dim())?;
    let n = design.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty design".into()));
    }
    let r2 = DUPLICATE_RADIUS * DUPLICATE_RADIUS;
    let mut base = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        let xi = design.row(i);
        for j in 0..i {
            let xj = design.row(j);
            let d2 = sq_dist(xi, xj);
            if d2 <= r2 {
                return Err(Error::DuplicatePoint {
                    first: j,
                    second: i,
                    distance: d2.sqrt(),
                });
            }
            let v = k.corr_unchecked(xi, xj);
            base[(i, j)] = v;
            base[(j, i)] = v;
        }
    }

    let (r, chol, jitter) = factorize_with_jitter(&base)?;
    let lower = chol.l();
    Ok(CorrelationSystem {
        design: design.clone(),
        kernel: k.with_jitter(jitter),
        r,
        chol,
        lower,
    })
}

/// Cholesky of `base + δI` for the smallest `δ` in the escalation sequence
/// that succeeds.
pub(crate) fn factorize_with_jitter(
    base: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Cholesky<f64, Dyn>, f64)> {
    let n = base.nrows();
    let mut jitter = JITTER_START;
    loop {
        let mut r = base.clone();
        for i in 0..n {
            r[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(r.clone()) {
            return Ok((r, chol, jitter));
        }
        jitter *= 10.0;
        if jitter > JITTER_CAP * (1.0 + 1e-9) {
            return Err(Error::IllConditioned { jitter: JITTER_CAP });
        }
    }
}

/// Solves `R z = b` using the cached factorization.
pub fn solve_spd(sys: &CorrelationSystem, b: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(b.len(), sys.n())?;
    Ok(sys.solve(b))
}
