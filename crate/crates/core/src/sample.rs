//! The data carrier every estimator consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered series of finite observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub values: Vec<f64>,
    pub name: String,
    /// Values are prices whose log differences are returns.
    pub is_returns: bool,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::named(values, "sample")
    }

    pub fn named(values: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, have: 0 });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at index {i}")));
        }
        Ok(Self { values, name: name.into(), is_returns: false })
    }

    pub fn with_returns(mut self, is_returns: bool) -> Self {
        self.is_returns = is_returns;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(i) => Err(Error::Domain(format!("value at index {i} is not positive"))),
            None => Ok(()),
        }
    }
}
