//! Yearly retraining schedule for the complex model.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One retraining: fit on the inclusive year interval `train`, forecast `forecast_year`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrainStep {
    pub train: (i32, i32),
    pub forecast_year: i32,
}

/// Rolling plan: each forecast year `Y` is served by a model trained on
/// `[Y - window_years, Y - 1]`.
pub fn yearly_retrain_plan(
    test_years: RangeInclusive<i32>,
    window_years: u32,
) -> Result<Vec<RetrainStep>> {
    if window_years == 0 {
        return Err(Error::contract("retraining window must cover at least one year"));
    }
    if test_years.is_empty() {
        return Err(Error::contract("empty range of test years"));
    }
    let window = window_years as i32;
    Ok(test_years
        .map(|y| RetrainStep {
            train: (y - window, y - 1),
            forecast_year: y,
        })
        .collect())
}
