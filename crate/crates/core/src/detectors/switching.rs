use chrono::NaiveDateTime;

use super::{AdwinWindow, Eddm, EddmLevel, PageHinkley, RegressionErrorBinarizer};
use crate::error::{Error, Result};
use crate::strategies::{Strategy, SwitchEvent, Trigger};
use crate::types::ModelKind;

/// Toggles the active model on drift, otherwise keeps it.
pub fn detector_switch_policy(active: ModelKind, drift_fired: bool) -> ModelKind {
    if drift_fired {
        active.other()
    } else {
        active
    }
}

/// A drift detector fed with the active model's absolute error.
pub trait ErrorMonitor {
    fn trigger(&self) -> Trigger;

    /// Returns `true` when the detector signals drift.
    fn observe(&mut self, abs_error: f64, active: ModelKind) -> Result<bool>;

    fn reset(&mut self);
}

impl ErrorMonitor for PageHinkley {
    fn trigger(&self) -> Trigger {
        Trigger::PageHinkley
    }

    fn observe(&mut self, abs_error: f64, _active: ModelKind) -> Result<bool> {
        self.update(abs_error)
    }

    fn reset(&mut self) {
        PageHinkley::reset(self);
    }
}

/// ADWIN over errors divided by a fixed cap and clipped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct AdwinMonitor {
    window: AdwinWindow,
    cap: f64,
}

impl AdwinMonitor {
    pub fn new(window: AdwinWindow, cap: f64) -> Result<Self> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::contract(format!("ADWIN error cap {cap} must be positive")));
        }
        Ok(Self { window, cap })
    }

    pub fn window(&self) -> &AdwinWindow {
        &self.window
    }
}

impl ErrorMonitor for AdwinMonitor {
    fn trigger(&self) -> Trigger {
        Trigger::Adwin
    }

    fn observe(&mut self, abs_error: f64, _active: ModelKind) -> Result<bool> {
        if !abs_error.is_finite() {
            return Err(Error::contract(format!("non-finite error {abs_error}")));
        }
        self.window.insert((abs_error / self.cap).clamp(0.0, 1.0))
    }

    fn reset(&mut self) {
        self.window.reset();
    }
}

/// EDDM over binarized errors, with one calibrated threshold per model.
#[derive(Debug, Clone)]
pub struct EddmMonitor {
    eddm: Eddm,
    simple: RegressionErrorBinarizer,
    complex: RegressionErrorBinarizer,
    warnings: u64,
}

impl EddmMonitor {
    pub fn new(eddm: Eddm, simple: RegressionErrorBinarizer, complex: RegressionErrorBinarizer) -> Result<Self> {
        if simple.tau().is_none() || complex.tau().is_none() {
            return Err(Error::contract("EDDM binarizers must be calibrated"));
        }
        Ok(Self {
            eddm,
            simple,
            complex,
            warnings: 0,
        })
    }

    /// Warning-level signals seen so far; they never cause a switch.
    pub fn warnings(&self) -> u64 {
        self.warnings
    }
}

impl ErrorMonitor for EddmMonitor {
    fn trigger(&self) -> Trigger {
        Trigger::Eddm
    }

    fn observe(&mut self, abs_error: f64, active: ModelKind) -> Result<bool> {
        let binarizer = match active {
            ModelKind::Simple => &self.simple,
            ModelKind::Complex => &self.complex,
        };
        let miss = binarizer.binarize(abs_error)?;
        Ok(match self.eddm.update(miss) {
            EddmLevel::Drift => true,
            EddmLevel::Warning => {
                self.warnings += 1;
                false
            }
            EddmLevel::Normal => false,
        })
    }

    fn reset(&mut self) {
        self.eddm.reset();
    }
}

/// Emits the active model's forecast and toggles models when the monitor
/// fires on the active model's error. The monitor is reset after each switch.
#[derive(Debug, Clone)]
pub struct DetectorSwitch<M> {
    monitor: M,
    active: ModelKind,
}

impl<M: ErrorMonitor> DetectorSwitch<M> {
    pub fn new(monitor: M) -> Self {
        Self {
            monitor,
            active: ModelKind::Complex,
        }
    }

    pub fn active(&self) -> ModelKind {
        self.active
    }

    pub fn monitor(&self) -> &M {
        &self.monitor
    }
}

impl<M: ErrorMonitor> Strategy for DetectorSwitch<M> {
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
        let (err_simple, err_complex) = crate::strategies::abs_errors(actual, pred_simple, pred_complex)?;
        let err = match self.active {
            ModelKind::Simple => err_simple,
            ModelKind::Complex => err_complex,
        };
        let drift = self.monitor.observe(err, self.active)?;
        let next = detector_switch_policy(self.active, drift);
        if next == self.active {
            return Ok(None);
        }
        self.monitor.reset();
        let event = SwitchEvent {
            timestamp,
            from_model: self.active,
            to_model: next,
            trigger: self.monitor.trigger(),
        };
        self.active = next;
        Ok(Some(event))
    }
}
