use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_QUANTILE: f64 = 0.95;

/// Nearest-rank quantile: the `ceil(q * n)`-th smallest value.
pub fn nearest_rank_quantile(sample: &[f64], q: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::contract("quantile of an empty sample"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::contract(format!("quantile level {q} outside (0, 1)")));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("non-finite value in quantile sample"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Turns absolute regression errors into misclassification flags: an error is
/// a miss when it exceeds a threshold calibrated as a quantile of past errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionErrorBinarizer {
    quantile: f64,
    tau: Option<f64>,
}

impl Default for RegressionErrorBinarizer {
    fn default() -> Self {
        Self {
            quantile: DEFAULT_QUANTILE,
            tau: None,
        }
    }
}

impl RegressionErrorBinarizer {
    pub fn new(quantile: f64) -> Result<Self> {
        if !(quantile > 0.0 && quantile < 1.0) {
            return Err(Error::contract(format!("quantile level {quantile} outside (0, 1)")));
        }
        Ok(Self { quantile, tau: None })
    }

    pub fn calibrate(&mut self, abs_errors: &[f64]) -> Result<f64> {
        if abs_errors.iter().any(|e| *e < 0.0) {
            return Err(Error::contract("calibration errors must be non-negative"));
        }
        let tau = nearest_rank_quantile(abs_errors, self.quantile)?;
        self.tau = Some(tau);
        Ok(tau)
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn quantile(&self) -> f64 {
        self.quantile
    }

    /// `true` iff `abs_error > tau`.
    pub fn binarize(&self, abs_error: f64) -> Result<bool> {
        let tau = self
            .tau
            .ok_or_else(|| Error::contract("binarizer used before calibration"))?;
        Ok(abs_error > tau)
    }
}
