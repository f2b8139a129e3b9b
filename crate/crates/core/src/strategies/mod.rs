//! Per-step forecast selection: the error intersection switcher, the EWMA
//! ensemble, and the fixed single-model baselines.

mod eia;
mod ensemble;
mod log;
mod trace;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ModelKind;

pub use eia::{eia_select, EiaSwitcher};
pub use ensemble::{ensemble_predict, ensemble_weights, EnsembleWeights, EwmaEnsemble};
pub use log::{read_switch_log, write_switch_log, SwitchRecord};
pub use trace::{ErrorTrace, TraceConfig, DEFAULT_WINDOW};

/// What caused a change of the active model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trigger {
    #[serde(rename = "eia")]
    Eia,
    #[serde(rename = "page_hinkley")]
    PageHinkley,
    #[serde(rename = "adwin")]
    Adwin,
    #[serde(rename = "eddm")]
    Eddm,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::Eia => "eia",
            Trigger::PageHinkley => "page_hinkley",
            Trigger::Adwin => "adwin",
            Trigger::Eddm => "eddm",
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Trigger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eia" => Ok(Trigger::Eia),
            "page_hinkley" => Ok(Trigger::PageHinkley),
            "adwin" => Ok(Trigger::Adwin),
            "eddm" => Ok(Trigger::Eddm),
            other => Err(Error::Parse {
                location: "trigger".into(),
                message: format!("unknown trigger `{other}`"),
            }),
        }
    }
}

/// A change of the active model, effective from the next forecast on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub timestamp: NaiveDateTime,
    pub from_model: ModelKind,
    pub to_model: ModelKind,
    pub trigger: Trigger,
}

/// A forecast-combination policy driven by the prequential loop.
///
/// Each hour the loop calls [`Strategy::emit`] with both shadow forecasts,
/// then reveals the truth through [`Strategy::observe`].
pub trait Strategy {
    /// The emitted forecast and the model it is attributed to.
    fn emit(&self, pred_simple: f64, pred_complex: f64) -> Result<(f64, ModelKind)>;

    fn observe(
        &mut self,
        timestamp: NaiveDateTime,
        actual: f64,
        pred_simple: f64,
        pred_complex: f64,
    ) -> Result<Option<SwitchEvent>>;
}

/// Always emits the same model's forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedModel(pub ModelKind);

impl Strategy for FixedModel {
    fn emit(&self, pred_simple: f64, pred_complex: f64) -> Result<(f64, ModelKind)> {
        Ok(match self.0 {
            ModelKind::Simple => (pred_simple, ModelKind::Simple),
            ModelKind::Complex => (pred_complex, ModelKind::Complex),
        })
    }

    fn observe(&mut self, _: NaiveDateTime, _: f64, _: f64, _: f64) -> Result<Option<SwitchEvent>> {
        Ok(None)
    }
}

pub(crate) fn abs_errors(actual: f64, pred_simple: f64, pred_complex: f64) -> Result<(f64, f64)> {
    if !actual.is_finite() {
        return Err(Error::contract(format!("non-finite actual value {actual}")));
    }
    Ok(((actual - pred_simple).abs(), (actual - pred_complex).abs()))
}
