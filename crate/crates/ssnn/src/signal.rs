use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite, uniformly sampled time series of real vectors (unit step,
/// discrete time k = 1..N).
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    values: Vec<DVector<T>>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(values: Vec<DVector<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("signal must have at least one sample".into()));
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::Dimension("signal samples must be non-empty vectors".into()));
        }
        for v in &values {
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "inconsistent sample dimensions: {} vs {}",
                    dim,
                    v.len()
                )));
            }
            if v.iter().any(|e| !e.is_finite_val()) {
                return Err(Error::NonFinite("signal sample"));
            }
        }
        Ok(Self { values })
    }

    /// Convenience constructor for scalar (1-D) series.
    pub fn from_scalars(values: impl IntoIterator<Item = T>) -> Result<Self> {
        Self::new(
            values
                .into_iter()
                .map(|v| DVector::from_element(1, v))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // N >= 1 by construction
    }

    /// Dimension of each sample.
    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Zero-based access.
    pub fn get(&self, i: usize) -> &DVector<T> {
        &self.values[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DVector<T>> {
        self.values.iter()
    }

    pub fn values(&self) -> &[DVector<T>] {
        &self.values
    }

    /// Scalar view of a 1-D signal.
    pub fn scalars(&self) -> Result<Vec<T>> {
        if self.dim() != 1 {
            return Err(Error::Dimension(format!(
                "scalar view requested for signal of dimension {}",
                self.dim()
            )));
        }
        Ok(self.values.iter().map(|v| v[0]).collect())
    }
}
