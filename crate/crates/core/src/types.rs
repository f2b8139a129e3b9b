//! Domain types shared between the stream, strategy and harness layers.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Timestamp format used by every CSV file the crate reads or writes.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// One hourly demand observation for one zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub timestamp: NaiveDateTime,
    pub zone_id: u32,
    pub demand: f64,
}

/// Which of the two static forecasters produced (or dominated) a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Simple,
    #[default]
    Complex,
}

impl ModelKind {
    pub fn other(self) -> Self {
        match self {
            ModelKind::Simple => ModelKind::Complex,
            ModelKind::Complex => ModelKind::Simple,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Simple => "simple",
            ModelKind::Complex => "complex",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(ModelKind::Simple),
            "complex" => Ok(ModelKind::Complex),
            other => Err(Error::Parse {
                location: "model kind".into(),
                message: format!("unknown model `{other}`"),
            }),
        }
    }
}

/// One prequential step: both shadow predictions, the emitted value and the truth.
///
/// For pure-switch strategies `emitted` is bit-equal to the prediction of
/// `active_model`. For the ensemble it is the convex combination and
/// `active_model` is the model carrying the larger weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastPair {
    pub timestamp: NaiveDateTime,
    pub zone_id: u32,
    pub actual: f64,
    pub pred_simple: f64,
    pub pred_complex: f64,
    pub emitted: f64,
    pub active_model: ModelKind,
}

/// Outcome of a Diebold-Mariano comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}
