//! Streaming regression under concept drift.
//!
//! Two static forecasters (a last-value naive model and a one-hidden-layer
//! ReLU network) shadow-predict every hour. Strategies decide which forecast
//! to emit: the error intersection switcher picks the model with the lower
//! windowed EWMA of recent absolute errors, an ensemble blends both, and
//! detector strategies (Page-Hinkley, ADWIN, EDDM) toggle on drift alarms.
//! The [`harness`] runs any of them prequentially and reports RMSE, SMAPE,
//! switch counts and a Diebold-Mariano comparison against the complex model.

pub mod detectors;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod strategies;
pub mod streams;
pub mod types;

pub use error::{Error, Result};
pub use types::{DemandRecord, DmResult, ForecastPair, ModelKind};
