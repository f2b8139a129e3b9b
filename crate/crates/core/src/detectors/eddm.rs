use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EddmParams {
    pub beta_warn: f64,
    pub beta_drift: f64,
    /// Errors observed before any level other than `Normal` is reported.
    pub min_errors: u64,
}

impl Default for EddmParams {
    fn default() -> Self {
        Self {
            beta_warn: 0.95,
            beta_drift: 0.90,
            min_errors: 30,
        }
    }
}

impl EddmParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.beta_drift && self.beta_drift <= self.beta_warn && self.beta_warn <= 1.0) {
            return Err(Error::contract(format!(
                "EDDM thresholds need 0 < beta_drift <= beta_warn <= 1, got {} / {}",
                self.beta_drift, self.beta_warn
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EddmLevel {
    Normal,
    Warning,
    Drift,
}

/// Early drift detection on the distance (in steps) between consecutive errors.
///
/// Tracks the running mean `p'` and standard deviation `s'` of those
/// distances and the historical maximum of `p' + 2 s'`. When the current
/// value falls below `beta * max` the stream is flagged. Drift resets the
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct Eddm {
    params: EddmParams,
    step: u64,
    last_error_step: u64,
    num_errors: u64,
    mean: f64,
    m2: f64,
    max_level: f64,
}

impl Eddm {
    pub fn new(params: EddmParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            step: 0,
            last_error_step: 0,
            num_errors: 0,
            mean: 0.0,
            m2: 0.0,
            max_level: 0.0,
        })
    }

    pub fn update(&mut self, misclassified: bool) -> EddmLevel {
        self.step += 1;
        if !misclassified {
            return EddmLevel::Normal;
        }
        self.num_errors += 1;
        let distance = (self.step - self.last_error_step) as f64;
        self.last_error_step = self.step;
        let old_mean = self.mean;
        self.mean += (distance - self.mean) / self.num_errors as f64;
        self.m2 += (distance - self.mean) * (distance - old_mean);

        let level = self.mean + 2.0 * self.std();
        if level > self.max_level {
            self.max_level = level;
        }
        if self.num_errors < self.params.min_errors {
            return EddmLevel::Normal;
        }
        let ratio = level / self.max_level;
        if ratio < self.params.beta_drift {
            self.reset();
            EddmLevel::Drift
        } else if ratio < self.params.beta_warn {
            EddmLevel::Warning
        } else {
            EddmLevel::Normal
        }
    }

    pub fn reset(&mut self) {
        *self = Self {
            params: self.params,
            step: 0,
            last_error_step: 0,
            num_errors: 0,
            mean: 0.0,
            m2: 0.0,
            max_level: 0.0,
        };
    }

    /// `p'`
    pub fn mean_distance(&self) -> f64 {
        self.mean
    }

    /// `s'`
    pub fn std(&self) -> f64 {
        if self.num_errors == 0 {
            0.0
        } else {
            (self.m2 / self.num_errors as f64).max(0.0).sqrt()
        }
    }

    pub fn max_level(&self) -> f64 {
        self.max_level
    }

    pub fn num_errors(&self) -> u64 {
        self.num_errors
    }
}
