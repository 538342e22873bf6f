//! Built-in test functions on their native domains.
//!
//! The higher-dimensional functions follow the definitions collected in the
//! Virtual Library of Simulation Experiments (S. Surjanovic and D. Bingham,
//! <https://www.sfu.ca/~ssurjano/>), with the original references noted on
//! each function.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A deterministic function with box bounds in native units.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub id: &'static str,
    pub lower: &'static [f64],
    pub upper: &'static [f64],
    eval: fn(&[f64]) -> f64,
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Evaluates at a native-unit point, rejecting points outside the bounds.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (j, v) in x.iter().enumerate() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let slack = 1e-12 * (hi - lo);
            if !(*v >= lo - slack && *v <= hi + slack) {
                return Err(Error::OutOfBounds {
                    dim: j,
                    value: *v,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok((self.eval)(x))
    }

    /// Evaluates at a point of the unit cube mapped affinely onto the bounds.
    pub fn evaluate_unit(&self, u: &[f64]) -> Result<f64> {
        let x: Vec<f64> = u
            .iter()
            .zip(self.lower.iter().zip(self.upper))
            .map(|(v, (lo, hi))| (lo + v * (hi - lo)).clamp(*lo, *hi))
            .collect();
        self.evaluate(&x)
    }

    pub fn scaling(&self) -> crate::dataset::Scaling {
        crate::dataset::Scaling::new(self.lower.to_vec(), self.upper.to_vec())
            .expect("built-in bounds are valid")
    }
}

/// `x₁ exp(−x₁² − x₂²)` on `[−2, 4]²` (Gramacy and Lee, 2009).
pub fn gramacy_lee(x1: f64, x2: f64) -> Result<f64> {
    GRAMACY_LEE.evaluate(&[x1, x2])
}

/// Damped oscillation `exp(−6x) cos(6πx)` on `[0, 1]`.
pub fn oscillator(x: f64) -> Result<f64> {
    OSCILLATOR.evaluate(&[x])
}

fn gramacy_lee_raw(x: &[f64]) -> f64 {
    x[0] * (-x[0] * x[0] - x[1] * x[1]).exp()
}

fn oscillator_raw(x: &[f64]) -> f64 {
    (-6.0 * x[0]).exp() * (6.0 * PI * x[0]).cos()
}

/// Water flow through a borehole (Morris, Mitchell and Ylvisaker, 1993).
///
/// Inputs: `r_w, r, T_u, H_u, T_l, H_l, L, K_w`.
fn borehole(x: &[f64]) -> f64 {
    let (rw, r, tu, hu, tl, hl, l, kw) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
    let lr = (r / rw).ln();
    2.0 * PI * tu * (hu - hl) / (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl))
}

/// Cycle time of a piston (Kenett and Zacks, 1998).
///
/// Inputs: `M, S, V₀, k, P₀, T_a, T₀`.
fn piston(x: &[f64]) -> f64 {
    let (m, s, v0, k, p0, ta, t0) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6]);
    let a = p0 * s + 19.62 * m - k * v0 / s;
    let v = s / (2.0 * k) * ((a * a + 4.0 * k * p0 * v0 * ta / t0).sqrt() - a);
    2.0 * PI * (m / (k + s * s * p0 * v0 * ta / (t0 * v * v))).sqrt()
}

/// Midpoint voltage of an output transformerless push-pull circuit
/// (Ben-Ari and Steinberg, 2007).
///
/// Inputs: `R_b1, R_b2, R_f, R_c1, R_c2, β`.
fn otl_circuit(x: &[f64]) -> f64 {
    let (rb1, rb2, rf, rc1, rc2, beta) = (x[0], x[1], x[2], x[3], x[4], x[5]);
    let vb1 = 12.0 * rb2 / (rb1 + rb2);
    let bc = beta * (rc2 + 9.0);
    let den = bc + rf;
    (vb1 + 0.74) * bc / den + 11.35 * rf / den + 0.74 * rf * bc / (den * rc1)
}

/// Eight-dimensional Dette–Pepelyshev function (Dette and Pepelyshev, 2010).
fn dette_pepelyshev(x: &[f64]) -> f64 {
    let t1 = 4.0 * (x[0] - 2.0 + 8.0 * x[1] - 8.0 * x[1] * x[1]).powi(2);
    let t2 = (3.0 - 4.0 * x[1]).powi(2);
    let t3 = 16.0 * (x[2] + 1.0).sqrt() * (2.0 * x[2] - 1.0).powi(2);
    let mut tail = 0.0;
    let mut partial = x[2];
    for i in 4..=8 {
        partial += x[i - 1];
        tail += i as f64 * (1.0 + partial).ln();
    }
    t1 + t2 + t3 + tail
}

/// Bending stress of a cantilever beam (Eldred et al., 2007), as a function
/// of width `w`, thickness `t` and the horizontal and vertical loads `X, Y`:
/// `600Y/(wt²) + 600X/(w²t)`.
fn cantilever_beam(x: &[f64]) -> f64 {
    let (w, t, h, v) = (x[0], x[1], x[2], x[3]);
    600.0 * v / (w * t * t) + 600.0 * h / (w * w * t)
}

pub const GRAMACY_LEE: TestFunction = TestFunction {
    id: "gramacy_lee",
    lower: &[-2.0, -2.0],
    upper: &[4.0, 4.0],
    eval: gramacy_lee_raw,
};

pub const OSCILLATOR: TestFunction = TestFunction {
    id: "oscillator",
    lower: &[0.0],
    upper: &[1.0],
    eval: oscillator_raw,
};

pub const BOREHOLE: TestFunction = TestFunction {
    id: "borehole",
    lower: &[0.05, 100.0, 63070.0, 990.0, 63.1, 700.0, 1120.0, 9855.0],
    upper: &[0.15, 50000.0, 115600.0, 1110.0, 116.0, 820.0, 1680.0, 12045.0],
    eval: borehole,
};

pub const PISTON: TestFunction = TestFunction {
    id: "piston",
    lower: &[30.0, 0.005, 0.002, 1000.0, 90000.0, 290.0, 340.0],
    upper: &[60.0, 0.020, 0.010, 5000.0, 110000.0, 296.0, 360.0],
    eval: piston,
};

pub const OTL_CIRCUIT: TestFunction = TestFunction {
    id: "otl_circuit",
    lower: &[50.0, 25.0, 0.5, 1.2, 0.25, 50.0],
    upper: &[150.0, 70.0, 3.0, 2.5, 1.2, 300.0],
    eval: otl_circuit,
};

pub const DETTE_PEPELYSHEV: TestFunction = TestFunction {
    id: "dette_pepelyshev",
    lower: &[0.0; 8],
    upper: &[1.0; 8],
    eval: dette_pepelyshev,
};

pub const CANTILEVER_BEAM: TestFunction = TestFunction {
    id: "cantilever_beam",
    lower: &[1.0, 1.0, 300.0, 800.0],
    upper: &[4.0, 4.0, 700.0, 1200.0],
    eval: cantilever_beam,
};

/// Every built-in function.
pub fn registry() -> [TestFunction; 7] {
    [
        OSCILLATOR,
        GRAMACY_LEE,
        BOREHOLE,
        PISTON,
        OTL_CIRCUIT,
        DETTE_PEPELYSHEV,
        CANTILEVER_BEAM,
    ]
}

/// Looks up a built-in function by id.
pub fn standard_suite(id: &str) -> Result<TestFunction> {
    registry()
        .into_iter()
        .find(|f| f.id == id)
        .ok_or_else(|| Error::NotFound(format!("test function '{id}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gramacy_lee_values() {
        assert_eq!(gramacy_lee(0.0, 0.0).unwrap(), 0.0);
        assert!((gramacy_lee(1.0, 0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(GRAMACY_LEE.lower, &[-2.0, -2.0]);
        assert_eq!(GRAMACY_LEE.upper, &[4.0, 4.0]);
        assert!(matches!(gramacy_lee(4.5, 0.0), Err(Error::OutOfBounds { dim: 0, .. })));
    }

    #[test]
    fn oscillator_values() {
        assert_eq!(oscillator(0.0).unwrap(), 1.0);
        assert!((oscillator(1.0 / 6.0).unwrap() + (-1.0f64).exp()).abs() < 1e-15);
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert!(oscillator(x).unwrap().abs() <= (-6.0 * x).exp() + 1e-15);
        }
        assert!(oscillator(-0.1).is_err());
    }

    #[test]
    fn unknown_id() {
        assert!(matches!(standard_suite("branin"), Err(Error::NotFound(_))));
        assert_eq!(standard_suite("piston").unwrap().dim(), 7);
    }

    #[test]
    fn unit_cube_adapter_hits_bounds() {
        let f = standard_suite("borehole").unwrap();
        let lo = f.evaluate(f.lower).unwrap();
        assert_eq!(f.evaluate_unit(&[0.0; 8]).unwrap(), lo);
        assert!(f.evaluate_unit(&[1.0; 8]).is_ok());
    }
}
