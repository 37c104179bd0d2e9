use crate::error::{invalid, Error, Result};
use crate::linalg::{c, CVector, C64};

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: CVector,
}

impl QuantumState {
    /// Normalizes `amplitudes`; rejects the zero vector.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || !norm.is_finite() || norm == 0.0 {
            return invalid("state vector must be nonzero and finite");
        }
        Ok(Self {
            amplitudes: amplitudes / C64::from(norm),
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(CVector::from_iterator(values.len(), values.iter().map(|&v| c(v, 0.0))))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return invalid(format!("basis index {index} out of range for dimension {dim}"));
        }
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    /// Wraps a vector that is already unit-norm (within `1e-10`).
    pub(crate) fn from_unit(amplitudes: CVector) -> Self {
        debug_assert!((amplitudes.norm() - 1.0).abs() < 1e-10);
        Self { amplitudes }
    }

    /// Wraps an intermediate integrator stage without any norm check.
    pub(crate) fn from_raw(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn overlap(&self, other: &QuantumState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn distance(&self, other: &QuantumState) -> f64 {
        (&self.amplitudes - &other.amplitudes).norm()
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}
