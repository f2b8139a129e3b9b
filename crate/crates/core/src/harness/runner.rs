use chrono::{Datelike, Duration, NaiveDateTime};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::{evaluate, EvaluationReport};
use super::config::{ExperimentConfig, RetrainConfig, StrategyKind, StreamSource};
use crate::detectors::{
    AdwinMonitor, AdwinWindow, DetectorSwitch, Eddm, EddmMonitor, PageHinkley, RegressionErrorBinarizer,
};
use crate::error::{Error, Result};
use crate::models::{build_features, naive_predict, yearly_retrain_plan, ComplexModel, REQUIRED_HISTORY};
use crate::streams::{generate_synthetic, read_demand_file, top_zones_filter, ZoneStream};
use crate::strategies::{EiaSwitcher, ErrorTrace, EwmaEnsemble, FixedModel, Strategy, SwitchRecord};
use crate::types::{ForecastPair, ModelKind};

/// Values written into the future during a causality audit.
const POISONS: [f64; 2] = [f64::NAN, 1.0e9];

/// A forecast row of the prequential log; `scored` rows lie in the test segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoggedForecast {
    pub pair: ForecastPair,
    pub scored: bool,
}

/// EWMAs of both models' absolute errors after observing an hour.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EwmaPoint {
    pub simple: Option<f64>,
    pub complex: Option<f64>,
}

/// The complex model in force from `start_index` onward.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSegment {
    pub start_index: usize,
    pub model: ComplexModel,
}

/// Complex models ordered by the hour index from which they forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSchedule {
    segments: Vec<ModelSegment>,
}

impl ModelSchedule {
    pub fn single(model: ComplexModel) -> Self {
        Self {
            segments: vec![ModelSegment { start_index: 0, model }],
        }
    }

    pub fn new(mut segments: Vec<ModelSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::contract("model schedule needs at least one model"));
        }
        segments.sort_by_key(|s| s.start_index);
        let nz = segments[0].model.num_zones;
        if segments.iter().any(|s| s.model.num_zones != nz) {
            return Err(Error::contract("scheduled models disagree on the zone count"));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[ModelSegment] {
        &self.segments
    }

    pub fn num_zones(&self) -> usize {
        self.segments[0].model.num_zones
    }

    /// The latest model starting at or before `t`; the first one before that.
    pub fn model_at(&self, t: usize) -> &ComplexModel {
        let k = self.segments.partition_point(|s| s.start_index <= t);
        &self.segments[k.saturating_sub(1)].model
    }
}

/// Quantities fixed from the training segment before the loop starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub adwin_cap: f64,
    pub eddm_simple: RegressionErrorBinarizer,
    pub eddm_complex: RegressionErrorBinarizer,
}

/// Both shadow forecasts for every hour from [`REQUIRED_HISTORY`] on.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneForecasts {
    pub zone_id: u32,
    pub zone_index: usize,
    /// Stream index of the first entry.
    pub first: usize,
    pub timestamps: Vec<NaiveDateTime>,
    pub actual: Vec<f64>,
    pub pred_simple: Vec<f64>,
    pub pred_complex: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub report: EvaluationReport,
    /// All zones, each in time order, zones by ascending id.
    pub forecasts: Vec<LoggedForecast>,
    /// Parallel to `forecasts`.
    pub ewma: Vec<EwmaPoint>,
    pub switches: Vec<SwitchRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditMismatch {
    pub zone_id: u32,
    pub timestamp: NaiveDateTime,
    pub what: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuditReport {
    pub checked: usize,
    pub mismatches: Vec<AuditMismatch>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.mismatches.is_empty()
    }
}

/// A loaded, trained and calibrated experiment, reusable across strategies.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub streams: Vec<ZoneStream>,
    /// Index of the first scored hour.
    pub split: usize,
    pub schedule: ModelSchedule,
    pub calibration: Calibration,
    pub forecasts: Vec<ZoneForecasts>,
}

/// Loads the configured stream, trains, and runs the configured strategy.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let exp = Experiment::prepare(config)?;
    exp.run(exp.config.strategy)
}

/// Streams named by the config, zone-filtered and sorted by zone id.
pub fn load_streams(config: &ExperimentConfig) -> Result<Vec<ZoneStream>> {
    let streams = match &config.stream {
        StreamSource::Synthetic(syn) => generate_synthetic(syn)?.0,
        StreamSource::Csv { path } => read_demand_file(path)?,
    };
    let mut streams = match config.top_zones {
        Some(k) => top_zones_filter(streams, k)?,
        None => streams,
    };
    streams.sort_by_key(|s| s.zone_id);
    Ok(streams)
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        let config = config.resolved()?;
        config.validate()?;
        let streams = load_streams(&config)?;
        Self::from_streams(config, streams)
    }

    /// Trains the complex model(s) on `streams` per the config.
    pub fn from_streams(config: ExperimentConfig, streams: Vec<ZoneStream>) -> Result<Self> {
        let streams = sorted(streams);
        let split = check_layout(&config, &streams)?;
        let schedule = train_schedule(&config, &streams, split)?;
        Self::with_schedule(config, streams, schedule)
    }

    /// Uses already trained models instead of fitting new ones.
    pub fn with_schedule(config: ExperimentConfig, streams: Vec<ZoneStream>, schedule: ModelSchedule) -> Result<Self> {
        let streams = sorted(streams);
        let split = check_layout(&config, &streams)?;
        if schedule.num_zones() != streams.len() {
            return Err(Error::config(format!(
                "model expects {} zones, stream has {}",
                schedule.num_zones(),
                streams.len()
            )));
        }
        let forecasts = streams
            .par_iter()
            .enumerate()
            .map(|(zi, s)| shadow_forecasts(s, zi, &schedule))
            .collect::<Result<Vec<_>>>()?;
        let calibration = calibrate(&config, &streams, &forecasts, split)?;
        Ok(Self {
            config,
            streams,
            split,
            schedule,
            calibration,
            forecasts,
        })
    }

    pub fn first_scored(&self) -> NaiveDateTime {
        self.streams[0].timestamp(self.split)
    }

    /// Runs one strategy over every zone.
    pub fn run(&self, kind: StrategyKind) -> Result<ExperimentOutcome> {
        let runs = self
            .forecasts
            .par_iter()
            .map(|zf| self.simulate(kind, zf))
            .collect::<Result<Vec<_>>>()?;
        let mut forecasts = Vec::new();
        let mut ewma = Vec::new();
        let mut switches = Vec::new();
        for run in runs {
            forecasts.extend(run.rows);
            ewma.extend(run.ewma);
            switches.extend(run.switches);
        }
        let report = evaluate(kind, &forecasts)?;
        info!(
            "{kind}: rmse {:.4}, smape {:.4}, {} switches over {} scored forecasts",
            report.rmse, report.smape, report.switch_count, report.test_segment.forecasts
        );
        Ok(ExperimentOutcome {
            report,
            forecasts,
            ewma,
            switches,
        })
    }

    pub fn build_strategy(&self, kind: StrategyKind) -> Result<Box<dyn Strategy>> {
        let d = &self.config.detectors;
        let c = &self.calibration;
        Ok(match kind {
            StrategyKind::SimpleOnly => Box::new(FixedModel(ModelKind::Simple)),
            StrategyKind::ComplexOnly => Box::new(FixedModel(ModelKind::Complex)),
            StrategyKind::EnsembleEwma => Box::new(EwmaEnsemble::new(&self.config.trace)?),
            StrategyKind::Eia => Box::new(EiaSwitcher::new(&self.config.trace)?),
            StrategyKind::PageHinkleySwitch => Box::new(DetectorSwitch::new(PageHinkley::new(d.page_hinkley)?)),
            StrategyKind::AdwinSwitch => Box::new(DetectorSwitch::new(AdwinMonitor::new(
                AdwinWindow::new(d.adwin)?,
                c.adwin_cap,
            )?)),
            StrategyKind::EddmSwitch => Box::new(DetectorSwitch::new(EddmMonitor::new(
                Eddm::new(d.eddm)?,
                c.eddm_simple.clone(),
                c.eddm_complex.clone(),
            )?)),
        })
    }

    fn simulate(&self, kind: StrategyKind, zf: &ZoneForecasts) -> Result<ZoneRun> {
        let mut strategy = self.build_strategy(kind)?;
        let mut trace_s = ErrorTrace::from_config(&self.config.trace)?;
        let mut trace_c = ErrorTrace::from_config(&self.config.trace)?;
        let n = zf.actual.len();
        let mut run = ZoneRun {
            rows: Vec::with_capacity(n),
            ewma: Vec::with_capacity(n),
            switches: Vec::new(),
        };
        for k in 0..n {
            let (ts, actual, ps, pc) = (zf.timestamps[k], zf.actual[k], zf.pred_simple[k], zf.pred_complex[k]);
            let (emitted, active) = strategy.emit(ps, pc)?;
            run.rows.push(LoggedForecast {
                pair: ForecastPair {
                    timestamp: ts,
                    zone_id: zf.zone_id,
                    actual,
                    pred_simple: ps,
                    pred_complex: pc,
                    emitted,
                    active_model: active,
                },
                scored: zf.first + k >= self.split,
            });
            let event = strategy.observe(ts, actual, ps, pc)?;
            trace_s.update((actual - ps).abs())?;
            trace_c.update((actual - pc).abs())?;
            let point = EwmaPoint {
                simple: trace_s.ewma(),
                complex: trace_c.ewma(),
            };
            run.ewma.push(point);
            if let Some(event) = event {
                run.switches.push(SwitchRecord {
                    zone_id: zf.zone_id,
                    event,
                    ewma_simple: point.simple,
                    ewma_complex: point.complex,
                });
            }
        }
        Ok(run)
    }

    /// Causality audit: for each of the first `max_steps` forecast hours `t`
    /// (all if `None`), overwrite demand at hours `>= t`, recompute both
    /// forecasts and replay the strategy from scratch on the poisoned
    /// stream, and compare the emitted value bit for bit with the normal run.
    ///
    /// The complex models are held fixed; they are fitted before the loop.
    pub fn audit(&self, kind: StrategyKind, max_steps: Option<usize>) -> Result<AuditReport> {
        let outcome = self.run(kind)?;
        let mut offset = 0;
        let mut report = AuditReport::default();
        for (stream, zf) in self.streams.iter().zip(&self.forecasts) {
            let n = zf.actual.len();
            let rows = &outcome.forecasts[offset..offset + n];
            offset += n;
            let steps = max_steps.map_or(n, |m| m.min(n));
            let zone_report = (0..steps)
                .into_par_iter()
                .map(|k| self.audit_step(kind, stream, zf, rows, k))
                .collect::<Result<Vec<_>>>()?;
            for found in zone_report {
                report.checked += 1;
                report.mismatches.extend(found);
            }
        }
        Ok(report)
    }

    fn audit_step(
        &self,
        kind: StrategyKind,
        stream: &ZoneStream,
        zf: &ZoneForecasts,
        rows: &[LoggedForecast],
        k: usize,
    ) -> Result<Vec<AuditMismatch>> {
        let t = zf.first + k;
        let expected = rows[k].pair;
        let mut found = Vec::new();
        let mut flag = |what: String| {
            found.push(AuditMismatch {
                zone_id: zf.zone_id,
                timestamp: expected.timestamp,
                what,
            })
        };
        for poison in POISONS {
            let mut demand = stream.demand.clone();
            demand[t..].fill(poison);
            let (ps, pc) = forecast_at(&demand, stream.start, t, zf.zone_index, &self.schedule)?;
            if ps.to_bits() != expected.pred_simple.to_bits() {
                flag(format!("simple forecast {ps} vs {} under poison {poison}", expected.pred_simple));
            }
            if pc.to_bits() != expected.pred_complex.to_bits() {
                flag(format!("complex forecast {pc} vs {} under poison {poison}", expected.pred_complex));
            }
            let mut strategy = self.build_strategy(kind)?;
            for j in 0..k {
                let s = zf.first + j;
                strategy.observe(zf.timestamps[j], demand[s], zf.pred_simple[j], zf.pred_complex[j])?;
            }
            let (emitted, active) = strategy.emit(ps, pc)?;
            if emitted.to_bits() != expected.emitted.to_bits() || active != expected.active_model {
                flag(format!(
                    "emitted {emitted} ({active}) vs {} ({}) under poison {poison}",
                    expected.emitted, expected.active_model
                ));
            }
        }
        Ok(found)
    }
}

struct ZoneRun {
    rows: Vec<LoggedForecast>,
    ewma: Vec<EwmaPoint>,
    switches: Vec<SwitchRecord>,
}

fn sorted(mut streams: Vec<ZoneStream>) -> Vec<ZoneStream> {
    streams.sort_by_key(|s| s.zone_id);
    streams
}

/// Checks that all zones share one hourly grid and returns the first scored index.
fn check_layout(config: &ExperimentConfig, streams: &[ZoneStream]) -> Result<usize> {
    let Some(first) = streams.first() else {
        return Err(Error::config("no zone streams to evaluate"));
    };
    if let Some(s) = streams.iter().find(|s| s.start != first.start || s.len() != first.len()) {
        return Err(Error::config(format!(
            "zone {} covers {} hours from {}, zone {} covers {} hours from {}",
            s.zone_id,
            s.len(),
            s.start,
            first.zone_id,
            first.len(),
            first.start
        )));
    }
    if streams.windows(2).any(|w| w[0].zone_id == w[1].zone_id) {
        return Err(Error::config("duplicate zone ids"));
    }
    let last_train = first.index_of(config.train_end).ok_or_else(|| {
        Error::config(format!(
            "train_end {} is not an hour of the stream ({} .. {:?})",
            config.train_end,
            first.start,
            first.end()
        ))
    })?;
    let split = last_train + 1;
    if split <= REQUIRED_HISTORY {
        return Err(Error::config(format!(
            "training segment ends at hour {split}; forecasting needs {REQUIRED_HISTORY} hours of history first"
        )));
    }
    if split >= first.len() {
        return Err(Error::config("train_end leaves no hours to score"));
    }
    Ok(split)
}

fn forecast_at(
    demand: &[f64],
    start: NaiveDateTime,
    t: usize,
    zone_index: usize,
    schedule: &ModelSchedule,
) -> Result<(f64, f64)> {
    let history = &demand[..t];
    let ps = naive_predict(history)?;
    let pc = schedule
        .model_at(t)
        .predict(history, start + Duration::hours(t as i64), zone_index)?;
    Ok((ps, pc))
}

fn shadow_forecasts(stream: &ZoneStream, zone_index: usize, schedule: &ModelSchedule) -> Result<ZoneForecasts> {
    let first = REQUIRED_HISTORY;
    let n = stream.len().saturating_sub(first);
    let mut zf = ZoneForecasts {
        zone_id: stream.zone_id,
        zone_index,
        first,
        timestamps: Vec::with_capacity(n),
        actual: Vec::with_capacity(n),
        pred_simple: Vec::with_capacity(n),
        pred_complex: Vec::with_capacity(n),
    };
    for t in first..stream.len() {
        let (ps, pc) = forecast_at(&stream.demand, stream.start, t, zone_index, schedule)?;
        zf.timestamps.push(stream.timestamp(t));
        zf.actual.push(stream.demand[t]);
        zf.pred_simple.push(ps);
        zf.pred_complex.push(pc);
    }
    Ok(zf)
}

/// Feature/target pairs of all zones for hour indices in `range` passing `keep`.
pub fn training_samples(
    streams: &[ZoneStream],
    range: std::ops::Range<usize>,
    keep: impl Fn(usize) -> bool + Sync,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let nz = streams.len();
    let per_zone = streams
        .par_iter()
        .enumerate()
        .map(|(zi, s)| {
            range
                .clone()
                .filter(|t| *t >= REQUIRED_HISTORY && *t < s.len() && keep(*t))
                .map(|t| {
                    let f = build_features(&s.demand[..t], s.timestamp(t), zi, nz)?;
                    Ok((f.to_vec(), s.demand[t]))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_zone.into_iter().flatten().collect())
}

fn period_of(stream: &ZoneStream, retrain: &RetrainConfig, t: usize) -> i32 {
    match retrain.period_hours {
        Some(p) => (t / p) as i32,
        None => stream.timestamp(t).year(),
    }
}

fn train_schedule(config: &ExperimentConfig, streams: &[ZoneStream], split: usize) -> Result<ModelSchedule> {
    let nz = streams.len();
    if !config.retrain.enabled {
        let samples = training_samples(streams, REQUIRED_HISTORY..split, |_| true)?;
        info!("training complex model on {} samples", samples.len());
        return Ok(ModelSchedule::single(ComplexModel::fit(&samples, nz, &config.training)?));
    }

    let reference = &streams[0];
    let retrain = &config.retrain;
    let first_period = period_of(reference, retrain, split);
    let last_period = period_of(reference, retrain, reference.len() - 1);
    let plan = yearly_retrain_plan(first_period..=last_period, retrain.window_years)?;
    let mut segments = Vec::with_capacity(plan.len());
    for (i, step) in plan.iter().enumerate() {
        // the first model also sees the training part of its own period
        let start_index = if i == 0 {
            split
        } else {
            (split..reference.len())
                .find(|t| period_of(reference, retrain, *t) == step.forecast_year)
                .expect("plan periods lie inside the stream")
        };
        let samples = training_samples(streams, REQUIRED_HISTORY..start_index, |t| {
            period_of(reference, retrain, t) >= step.train.0
        })?;
        if samples.is_empty() {
            return Err(Error::config(format!(
                "no training data for period {} (window from {})",
                step.forecast_year, step.train.0
            )));
        }
        info!(
            "period {}: training complex model on {} samples",
            step.forecast_year,
            samples.len()
        );
        segments.push(ModelSegment {
            start_index,
            model: ComplexModel::fit(&samples, nz, &config.training)?,
        });
    }
    ModelSchedule::new(segments)
}

fn calibrate(
    config: &ExperimentConfig,
    streams: &[ZoneStream],
    forecasts: &[ZoneForecasts],
    split: usize,
) -> Result<Calibration> {
    let adwin_cap = match config.detectors.adwin_error_cap {
        Some(cap) => cap,
        None => {
            let peak = streams
                .iter()
                .flat_map(|s| s.demand[..split].iter().copied())
                .fold(0.0, f64::max);
            if peak > 0.0 {
                peak
            } else {
                warn!("training demand is identically zero; ADWIN error cap set to 1");
                1.0
            }
        }
    };
    let mut err_s = Vec::new();
    let mut err_c = Vec::new();
    for zf in forecasts {
        let n_train = split.saturating_sub(zf.first).min(zf.actual.len());
        for k in 0..n_train {
            err_s.push((zf.actual[k] - zf.pred_simple[k]).abs());
            err_c.push((zf.actual[k] - zf.pred_complex[k]).abs());
        }
    }
    let q = config.detectors.eddm_quantile;
    let mut eddm_simple = RegressionErrorBinarizer::new(q)?;
    let mut eddm_complex = RegressionErrorBinarizer::new(q)?;
    eddm_simple.calibrate(&err_s)?;
    eddm_complex.calibrate(&err_c)?;
    Ok(Calibration {
        adwin_cap,
        eddm_simple,
        eddm_complex,
    })
}
