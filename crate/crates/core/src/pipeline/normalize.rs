use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running per-dimension range used to bring channels with different
/// engineering units onto a common scale.
///
/// `scale_i = max(max_i - min_i, 1e-12 * (|max_i| + 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    dims: usize,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Normalizer {
    pub fn new(dims: usize) -> Self {
        Normalizer {
            dims,
            min: Vec::new(),
            max: Vec::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    /// Widens the ranges to include `x`.
    pub fn observe(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: x.len() });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if self.min.is_empty() {
            self.min = x.to_vec();
            self.max = x.to_vec();
        } else {
            for ((lo, hi), v) in self.min.iter_mut().zip(self.max.iter_mut()).zip(x) {
                *lo = lo.min(*v);
                *hi = hi.max(*v);
            }
        }
        Ok(())
    }

    pub fn scale(&self, i: usize) -> f64 {
        if self.min.is_empty() {
            return 1.0;
        }
        let floor = 1e-12 * (self.max[i].abs() + 1.0);
        (self.max[i] - self.min[i]).max(floor)
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..self.dims).map(|i| self.scale(i)).collect()
    }

    /// Updates the ranges with `x`, then maps it to `(x - min) / scale`.
    pub fn normalize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.observe(x)?;
        Ok(self.apply(x))
    }

    /// Maps `x` without touching the ranges.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                let lo = self.min.get(i).copied().unwrap_or(0.0);
                (v - lo) / self.scale(i)
            })
            .collect()
    }
}
