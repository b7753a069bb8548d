use serde::{Deserialize, Serialize};

use super::{Result, VecMathError};
use crate::scalar::Scalar;

/// Dimension of the shared audio/text embedding space.
pub const EMBEDDING_DIM: usize = 512;

/// Tolerance on the L2 norm of a normalized embedding.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// A finite real vector in the joint audio/text space.
///
/// Embeddings are not forced to unit length on construction; use
/// [`Embedding::unit`] or [`Embedding::normalized`] for that.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Embedding<T: Scalar = f32> {
    values: Vec<T>,
}

impl<T: Scalar> Embedding<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(VecMathError::EmptyInput);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(VecMathError::NonFinite { index });
        }
        Ok(Self { values })
    }

    /// Builds an embedding and scales it to unit L2 norm.
    pub fn unit(values: Vec<T>) -> Result<Self> {
        Self::new(values)?.normalized()
    }

    /// The `axis`-th standard basis vector of dimension `dim`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dim {dim}");
        let mut values = vec![T::zero(); dim];
        values[axis] = T::one();
        Self { values }
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| T::from_f64_lossy(v)).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.as_f64()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| {
                let x = v.as_f64();
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_NORM_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(VecMathError::Degenerate("zero-norm vector"));
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .map(|v| T::from_f64_lossy(v.as_f64() / norm))
                .collect(),
        })
    }

    pub fn cast<U: Scalar>(&self) -> Embedding<U> {
        Embedding {
            values: self.values.iter().map(|v| U::from_f64_lossy(v.as_f64())).collect(),
        }
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(VecMathError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for Embedding<T> {
    type Error = VecMathError;

    fn try_from(values: Vec<T>) -> Result<Self> {
        Self::new(values)
    }
}

impl<T: Scalar> From<Embedding<T>> for Vec<T> {
    fn from(e: Embedding<T>) -> Self {
        e.values
    }
}
