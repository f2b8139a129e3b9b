//! Forecast accuracy metrics and the Diebold-Mariano significance test.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::types::DmResult;

/// Minimum number of paired errors accepted by [`dm_test`].
pub const DM_MIN_SAMPLES: usize = 10;

fn check_pair(predictions: &[f64], actuals: &[f64]) -> Result<()> {
    if predictions.len() != actuals.len() {
        return Err(Error::contract(format!(
            "length mismatch: {} predictions vs {} actuals",
            predictions.len(),
            actuals.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::contract("metric over an empty sequence"));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    check_pair(predictions, actuals)?;
    let sse: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

/// Symmetric mean absolute percentage error on the 0..=200 scale.
///
/// A term where forecast and actual are both zero contributes zero.
pub fn smape(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    check_pair(predictions, actuals)?;
    if let Some(v) = predictions.iter().chain(actuals).find(|v| **v < 0.0) {
        return Err(Error::contract(format!("smape expects non-negative values, got {v}")));
    }
    let total: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(f, a)| {
            let denom = (a.abs() + f.abs()) / 2.0;
            if denom == 0.0 {
                0.0
            } else {
                (f - a).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * total / predictions.len() as f64)
}

/// Two-sided Diebold-Mariano test on squared-error loss at horizon one.
///
/// The loss differential is `a_t^2 - b_t^2`; its variance is the lag-zero
/// autocovariance `(1/n) * sum (d_t - mean)^2`. A negative statistic means
/// `errors_a` has the smaller loss. A differential with zero variance yields
/// statistic 0 and p-value 1.
pub fn dm_test(errors_a: &[f64], errors_b: &[f64]) -> Result<DmResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::contract(format!(
            "length mismatch: {} vs {} errors",
            errors_a.len(),
            errors_b.len()
        )));
    }
    let n = errors_a.len();
    if n < DM_MIN_SAMPLES {
        return Err(Error::InsufficientSample {
            needed: DM_MIN_SAMPLES,
            got: n,
        });
    }
    let diffs: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let gamma0 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / nf;
    if gamma0 == 0.0 {
        return Ok(DmResult {
            statistic: 0.0,
            p_value: 1.0,
            n,
        });
    }
    let statistic = mean / (gamma0 / nf).sqrt();
    // P(|Z| > |s|) = erfc(|s| / sqrt 2)
    let p_value = erfc(statistic.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(DmResult {
        statistic,
        p_value,
        n,
    })
}
