use chrono::NaiveDateTime;

use super::{abs_errors, ErrorTrace, Strategy, SwitchEvent, TraceConfig, Trigger};
use crate::error::Result;
use crate::types::ModelKind;

/// The model with the strictly lower EWMA error; ties go to the complex model.
pub fn eia_select(trace_simple: &ErrorTrace, trace_complex: &ErrorTrace) -> Result<ModelKind> {
    let simple = trace_simple.require_ewma("simple")?;
    let complex = trace_complex.require_ewma("complex")?;
    Ok(if simple < complex {
        ModelKind::Simple
    } else {
        ModelKind::Complex
    })
}

/// Error intersection switcher.
///
/// Both models' absolute errors are tracked every hour; after each truth is
/// revealed the model with the lower EWMA becomes active for the next hour.
/// Until both traces hold an error the complex model is active.
#[derive(Debug, Clone)]
pub struct EiaSwitcher {
    simple: ErrorTrace,
    complex: ErrorTrace,
    active: ModelKind,
}

impl EiaSwitcher {
    pub fn new(config: &TraceConfig) -> Result<Self> {
        Ok(Self {
            simple: ErrorTrace::from_config(config)?,
            complex: ErrorTrace::from_config(config)?,
            active: ModelKind::Complex,
        })
    }

    pub fn active(&self) -> ModelKind {
        self.active
    }

    pub fn traces(&self) -> (&ErrorTrace, &ErrorTrace) {
        (&self.simple, &self.complex)
    }

    /// Consumes the truth for the forecasts issued one step earlier.
    pub fn step(
        &mut self,
        timestamp: NaiveDateTime,
        actual: f64,
        pred_simple: f64,
        pred_complex: f64,
    ) -> Result<Option<SwitchEvent>> {
        let (err_simple, err_complex) = abs_errors(actual, pred_simple, pred_complex)?;
        self.simple.update(err_simple)?;
        self.complex.update(err_complex)?;
        let next = eia_select(&self.simple, &self.complex)?;
        if next == self.active {
            return Ok(None);
        }
        let event = SwitchEvent {
            timestamp,
            from_model: self.active,
            to_model: next,
            trigger: Trigger::Eia,
        };
        self.active = next;
        Ok(Some(event))
    }
}

impl Strategy for EiaSwitcher {
    fn emit(&self, pred_simple: f64, pred_complex: f64) -> Result<(f64, ModelKind)> {
        Ok(match self.active {
            ModelKind::Simple => (pred_simple, ModelKind::Simple),
            ModelKind::Complex => (pred_complex, ModelKind::Complex),
        })
    }

    fn observe(
        &mut self,
        timestamp: NaiveDateTime,
        actual: f64,
        pred_simple: f64,
        pred_complex: f64,
    ) -> Result<Option<SwitchEvent>> {
        self.step(timestamp, actual, pred_simple, pred_complex)
    }
}
