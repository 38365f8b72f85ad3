//! Unit-norm vectors on the hypersphere and the small amount of geometry
//! the region machinery needs.

use crate::error::EditError;

/// Tolerance for accepting a vector as unit-norm.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Norm below which a vector cannot be normalized.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// An ℓ2-normalized vector.
///
/// Construction goes through [`UnitVector::new`] (validates the norm) or
/// [`UnitVector::normalize`] (rescales), so holding a `UnitVector` means
/// the unit-norm invariant holds within [`UNIT_NORM_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector {
    values: Vec<f64>,
}

impl UnitVector {
    /// Wraps an already-normalized vector, rejecting anything whose norm
    /// strays from 1 by more than [`UNIT_NORM_TOL`]. Written so that a
    /// NaN or infinite norm also fails.
    pub fn new(values: Vec<f64>) -> Result<Self, EditError> {
        let n = norm(&values);
        if !((n - 1.0).abs() <= UNIT_NORM_TOL) {
            return Err(EditError::DegenerateCenter { norm: n });
        }
        Ok(Self { values })
    }

    /// Rescales `values` to unit norm. Fails on (near-)zero, NaN, or
    /// overflowing input.
    pub fn normalize(values: Vec<f64>) -> Result<Self, EditError> {
        let n = norm(&values);
        if !n.is_finite() || n < DEGENERATE_NORM {
            return Err(EditError::DegenerateCenter { norm: n });
        }
        let values = values.into_iter().map(|x| x / n).collect();
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.values, &other.values)
    }

    /// Angular distance arccos(self·other), with the dot product clamped
    /// to [-1, 1] as a floating-point guard.
    pub fn angle_to(&self, other: &UnitVector) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Numerically stable softmax: shifts by the maximum before exponentiating.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
