//! Prequential experiment runner.
//!
//! Every forecast hour both models predict, the strategy emits one value,
//! and only then is the truth revealed to the strategy. Hours before the end
//! of the training segment are logged but not scored.

mod analysis;
mod config;
mod output;
mod runner;

pub use analysis::{
    compare_strategies, conditional_improvement, count_switches, evaluate, per_day_analysis, ComparisonRow,
    ComparisonTable, ConditionalImprovement, DayRow, EvaluationReport, SimpleUsage, TestSegment, ZoneMetrics,
};
pub use config::{apply_override, parse_document, ExperimentConfig, RetrainConfig, StrategyKind, StreamSource};
pub use output::{
    emit_outputs, read_forecasts_csv, read_forecasts_file, read_report, write_forecasts_csv, write_per_day_csv,
    write_plot_csv, OutputFiles, FORECASTS_FILE, PER_DAY_FILE, PLOT_FILE, REPORT_FILE, SWITCHES_FILE,
};
pub use runner::{
    load_streams, run_experiment, training_samples, AuditMismatch, AuditReport, Calibration, EwmaPoint, Experiment,
    ExperimentOutcome, LoggedForecast, ModelSegment, ModelSchedule, ZoneForecasts,
};
