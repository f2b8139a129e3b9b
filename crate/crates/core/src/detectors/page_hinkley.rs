use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageHinkleyParams {
    /// Magnitude of change tolerated per observation.
    pub delta: f64,
    /// Alarm threshold on `m_t - M_t`.
    pub lambda: f64,
    /// Forgetting factor applied to the cumulative deviation.
    pub alpha: f64,
}

impl Default for PageHinkleyParams {
    fn default() -> Self {
        Self {
            delta: 0.005,
            lambda: 50.0,
            alpha: 0.9999,
        }
    }
}

impl PageHinkleyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::contract(format!("Page-Hinkley delta {} must be >= 0", self.delta)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::contract(format!("Page-Hinkley lambda {} must be > 0", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::contract(format!("Page-Hinkley alpha {} outside (0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// Page-Hinkley test for an increase in the mean of the monitored signal.
///
/// ```text
/// mean_t = mean_{t-1} + (x_t - mean_{t-1}) / t
/// m_t    = alpha * m_{t-1} + (x_t - mean_t - delta)
/// M_t    = min(M_{t-1}, m_t)
/// drift  <=> m_t - M_t > lambda
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct PageHinkley {
    params: PageHinkleyParams,
    mean: f64,
    count: u64,
    cumulative: f64,
    minimum: f64,
}

impl PageHinkley {
    pub fn new(params: PageHinkleyParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            mean: 0.0,
            count: 0,
            cumulative: 0.0,
            minimum: 0.0,
        })
    }

    /// Feeds one observation; on drift the state is reset before returning `true`.
    pub fn update(&mut self, value: f64) -> Result<bool> {
        if !value.is_finite() {
            return Err(Error::contract(format!("Page-Hinkley input {value} is not finite")));
        }
        self.count += 1;
        self.mean += (value - self.mean) / self.count as f64;
        self.cumulative = self.params.alpha * self.cumulative + (value - self.mean - self.params.delta);
        self.minimum = self.minimum.min(self.cumulative);
        if self.cumulative - self.minimum > self.params.lambda {
            self.reset();
            return Ok(true);
        }
        Ok(false)
    }

    pub fn reset(&mut self) {
        self.mean = 0.0;
        self.count = 0;
        self.cumulative = 0.0;
        self.minimum = 0.0;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `m_t`.
    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    /// `M_t`.
    pub fn minimum(&self) -> f64 {
        self.minimum
    }

    pub fn params(&self) -> &PageHinkleyParams {
        &self.params
    }
}
