use crate::error::{Error, Result};

/// Flattened model parameters; the unit every protocol exchanges.
///
/// Layout follows [`MlpModel::flatten`](super::MlpModel::flatten): for each
/// layer, the `d_in × d_out` weight matrix row-major, then the `d_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Equality of every coordinate's bit pattern (distinguishes `0.0` from `-0.0`).
    pub fn bitwise_eq(&self, other: &WeightVector) -> bool {
        self.dim() == other.dim()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn max_abs_diff(&self, other: &WeightVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::Shape(format!(
                "weight vector has dim {}, expected {expected}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl AsRef<WeightVector> for WeightVector {
    fn as_ref(&self) -> &WeightVector {
        self
    }
}
