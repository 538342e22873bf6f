//! Training data on the unit cube and the affine map back to native units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::DUPLICATE_RADIUS;
use crate::points::{sq_dist, Points};

/// Per-dimension native bounds of an affine map onto `[0, 1]^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Scaling {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidArgument(
                "scaling bounds must be nonempty and of equal length".into(),
            ));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "dimension {d}: lower bound {lo} is not below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    /// Min–max scaling fitted to the columns of `native`.
    pub fn from_data(native: &Points) -> Result<Self> {
        let p = native.dim();
        let mut lower = vec![f64::INFINITY; p];
        let mut upper = vec![f64::NEG_INFINITY; p];
        for row in native.rows() {
            for (j, v) in row.iter().enumerate() {
                lower[j] = lower[j].min(*v);
                upper[j] = upper[j].max(*v);
            }
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Maps a unit-cube point to native units, clamped into the bounds.
    pub fn to_native(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (lo + v * (hi - lo)).clamp(*lo, *hi))
            .collect()
    }

    pub fn points_to_unit(&self, native: &Points) -> Result<Points> {
        if native.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: native.dim(),
            });
        }
        let mut out = Points::empty(self.dim());
        for row in native.rows() {
            out.push(&self.to_unit(row))?;
        }
        Ok(out)
    }
}

/// Design on the unit cube with its responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Points,
    y: Vec<f64>,
    scaling: Scaling,
}

impl Dataset {
    pub fn new(x: Points, y: Vec<f64>, scaling: Scaling) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.dim() != scaling.dim() {
            return Err(Error::DimensionMismatch {
                expected: scaling.dim(),
                got: x.dim(),
            });
        }
        if x.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 observations, got {}",
                x.len()
            )));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("response {v} is not finite")));
        }
        for row in x.rows() {
            if row.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
                return Err(Error::InvalidArgument(format!(
                    "point {row:?} is outside the unit cube"
                )));
            }
        }
        let r2 = DUPLICATE_RADIUS * DUPLICATE_RADIUS;
        for i in 0..x.len() {
            for j in 0..i {
                let d2 = sq_dist(x.row(i), x.row(j));
                if d2 <= r2 {
                    return Err(Error::DuplicatePoint {
                        first: j,
                        second: i,
                        distance: d2.sqrt(),
                    });
                }
            }
        }
        Ok(Self { x, y, scaling })
    }

    /// Min–max scales native inputs onto the unit cube.
    pub fn from_native(native: &Points, y: Vec<f64>) -> Result<Self> {
        let scaling = Scaling::from_data(native)?;
        let x = scaling.points_to_unit(native)?;
        Self::new(x, y, scaling)
    }

    pub fn x(&self) -> &Points {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// `max Y - min Y`.
    pub fn y_range(&self) -> f64 {
        let (lo, hi) = self
            .y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        hi - lo
    }

    pub fn is_constant(&self) -> bool {
        let scale = self.y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        self.y_range() <= 1e-14 * scale
    }

    /// Appends one unit-cube observation.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        let r2 = DUPLICATE_RADIUS * DUPLICATE_RADIUS;
        if let Some(i) = self.x.rows().position(|row| sq_dist(row, x) <= r2) {
            return Err(Error::DuplicatePoint {
                first: i,
                second: self.n(),
                distance: sq_dist(self.x.row(i), x).sqrt(),
            });
        }
        self.x.push(x)?;
        self.y.push(y);
        Ok(())
    }
}
