use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::config::StrategyKind;
use super::runner::LoggedForecast;
use crate::error::{Error, Result};
use crate::metrics::{dm_test, rmse, smape, DM_MIN_SAMPLES};
use crate::types::{DmResult, ForecastPair, ModelKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSegment {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub forecasts: usize,
    pub zones: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleUsage {
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMetrics {
    pub zone_id: u32,
    pub forecasts: usize,
    pub rmse: f64,
    pub smape: f64,
    pub switch_count: usize,
    pub simple_count: usize,
}

/// One zone-day of the per-day table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRow {
    pub date: NaiveDate,
    pub zone_id: u32,
    /// RMSE of the complex forecasts minus RMSE of the emitted forecasts.
    pub rmse_improvement: f64,
    pub simple_count: usize,
    pub total: usize,
}

impl DayRow {
    /// `"14/24"`-style count of Simple-active hours.
    pub fn simple_predictions(&self) -> String {
        format!("{}/{}", self.simple_count, self.total)
    }
}

/// Accuracy restricted to the hours where Simple was active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalImprovement {
    pub hours: usize,
    pub rmse_strategy: f64,
    pub rmse_complex: f64,
    /// `1 - rmse_strategy / rmse_complex`; `None` when the complex RMSE is 0.
    pub relative_improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub strategy: StrategyKind,
    pub test_segment: TestSegment,
    pub rmse: f64,
    pub smape: f64,
    pub switch_count: usize,
    pub simple_usage: SimpleUsage,
    /// Strategy errors against complex-model errors; `None` below the minimum sample.
    pub dm_vs_complex: Option<DmResult>,
    pub conditional_improvement: Option<ConditionalImprovement>,
    pub per_zone: Vec<ZoneMetrics>,
    pub per_day_table: Vec<DayRow>,
}

/// Number of active-model changes between consecutive rows of the same zone.
pub fn count_switches(log: &[ForecastPair]) -> usize {
    log.windows(2)
        .filter(|w| w[0].zone_id == w[1].zone_id && w[0].active_model != w[1].active_model)
        .count()
}

fn columns(log: &[ForecastPair]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let emitted = log.iter().map(|p| p.emitted).collect();
    let complex = log.iter().map(|p| p.pred_complex).collect();
    let actual = log.iter().map(|p| p.actual).collect();
    (emitted, complex, actual)
}

/// Per calendar day and zone: Simple-active hours and the RMSE gain of the
/// emitted forecasts over the complex ones, most Simple-active days first.
/// Ties keep chronological order, then zone order.
pub fn per_day_analysis(log: &[ForecastPair]) -> Result<Vec<DayRow>> {
    if log.is_empty() {
        return Err(Error::contract("per-day analysis of an empty forecast log"));
    }
    let mut days: BTreeMap<(NaiveDate, u32), Vec<ForecastPair>> = BTreeMap::new();
    for p in log {
        days.entry((p.timestamp.date(), p.zone_id)).or_default().push(*p);
    }
    let mut rows = days
        .into_iter()
        .map(|((date, zone_id), pairs)| {
            let (emitted, complex, actual) = columns(&pairs);
            Ok(DayRow {
                date,
                zone_id,
                rmse_improvement: rmse(&complex, &actual)? - rmse(&emitted, &actual)?,
                simple_count: pairs.iter().filter(|p| p.active_model == ModelKind::Simple).count(),
                total: pairs.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| Reverse(r.simple_count));
    Ok(rows)
}

/// RMSE of emitted and complex forecasts over Simple-active hours only;
/// `None` when Simple was never active.
pub fn conditional_improvement(log: &[ForecastPair]) -> Result<Option<ConditionalImprovement>> {
    let hours: Vec<ForecastPair> = log
        .iter()
        .filter(|p| p.active_model == ModelKind::Simple)
        .copied()
        .collect();
    if hours.is_empty() {
        return Ok(None);
    }
    let (emitted, complex, actual) = columns(&hours);
    let rmse_strategy = rmse(&emitted, &actual)?;
    let rmse_complex = rmse(&complex, &actual)?;
    Ok(Some(ConditionalImprovement {
        hours: hours.len(),
        rmse_strategy,
        rmse_complex,
        relative_improvement: (rmse_complex > 0.0).then(|| 1.0 - rmse_strategy / rmse_complex),
    }))
}

fn dm_vs_complex(log: &[ForecastPair]) -> Result<Option<DmResult>> {
    if log.len() < DM_MIN_SAMPLES {
        return Ok(None);
    }
    let strategy: Vec<f64> = log.iter().map(|p| p.actual - p.emitted).collect();
    let complex: Vec<f64> = log.iter().map(|p| p.actual - p.pred_complex).collect();
    dm_test(&strategy, &complex).map(Some)
}

fn zone_metrics(zone_id: u32, log: &[ForecastPair]) -> Result<ZoneMetrics> {
    let (emitted, _, actual) = columns(log);
    Ok(ZoneMetrics {
        zone_id,
        forecasts: log.len(),
        rmse: rmse(&emitted, &actual)?,
        smape: smape(&emitted, &actual)?,
        switch_count: count_switches(log),
        simple_count: log.iter().filter(|p| p.active_model == ModelKind::Simple).count(),
    })
}

/// Builds the report from a prequential log; only `scored` rows count.
///
/// Rows must be grouped by zone and time-ordered within a zone. Pooled
/// metrics are computed over the concatenation of all zones.
pub fn evaluate(strategy: StrategyKind, log: &[LoggedForecast]) -> Result<EvaluationReport> {
    let scored: Vec<ForecastPair> = log.iter().filter(|r| r.scored).map(|r| r.pair).collect();
    if scored.is_empty() {
        return Err(Error::contract("no scored forecasts in the log"));
    }
    let (emitted, _, actual) = columns(&scored);

    let mut per_zone = Vec::new();
    let mut zone_start = 0;
    for i in 1..=scored.len() {
        if i == scored.len() || scored[i].zone_id != scored[zone_start].zone_id {
            per_zone.push(zone_metrics(scored[zone_start].zone_id, &scored[zone_start..i])?);
            zone_start = i;
        }
    }
    let mut zones: Vec<u32> = per_zone.iter().map(|z| z.zone_id).collect();
    zones.sort_unstable();
    zones.dedup();
    if zones.len() != per_zone.len() {
        return Err(Error::contract("forecast log is not grouped by zone"));
    }

    let simple_count = scored.iter().filter(|p| p.active_model == ModelKind::Simple).count();
    Ok(EvaluationReport {
        strategy,
        test_segment: TestSegment {
            start: scored.iter().map(|p| p.timestamp).min().expect("non-empty"),
            end: scored.iter().map(|p| p.timestamp).max().expect("non-empty"),
            forecasts: scored.len(),
            zones,
        },
        rmse: rmse(&emitted, &actual)?,
        smape: smape(&emitted, &actual)?,
        switch_count: count_switches(&scored),
        simple_usage: SimpleUsage {
            count: simple_count,
            share: simple_count as f64 / scored.len() as f64,
        },
        dm_vs_complex: dm_vs_complex(&scored)?,
        conditional_improvement: conditional_improvement(&scored)?,
        per_zone,
        per_day_table: per_day_analysis(&scored)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: StrategyKind,
    pub rmse: f64,
    pub smape: f64,
    pub switch_count: usize,
    pub simple_count: usize,
    pub simple_share: f64,
    pub dm_statistic: Option<f64>,
    pub dm_p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub test_segment: TestSegment,
    /// Ascending RMSE; equal RMSEs keep input order.
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let seg = &self.test_segment;
        let _ = writeln!(
            out,
            "test segment {} .. {} ({} forecasts, {} zones)",
            seg.start,
            seg.end,
            seg.forecasts,
            seg.zones.len()
        );
        let _ = writeln!(
            out,
            "{:<4} {:<20} {:>12} {:>10} {:>9} {:>14} {:>12}",
            "rank", "strategy", "rmse", "smape", "switches", "simple", "dm p-value"
        );
        let mut rank = 0;
        let mut prev: Option<f64> = None;
        for (i, r) in self.rows.iter().enumerate() {
            if prev != Some(r.rmse) {
                rank = i + 1;
                prev = Some(r.rmse);
            }
            let p = r.dm_p_value.map_or_else(|| "-".to_string(), |p| format!("{p:.3e}"));
            let _ = writeln!(
                out,
                "{:<4} {:<20} {:>12.4} {:>10.4} {:>9} {:>14} {:>12}",
                rank,
                r.strategy.as_str(),
                r.rmse,
                r.smape,
                r.switch_count,
                format!("{} ({:.2}%)", r.simple_count, 100.0 * r.simple_share),
                p
            );
        }
        out
    }
}

/// Ranks reports over one test segment by RMSE.
pub fn compare_strategies(reports: &[EvaluationReport]) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(Error::contract(format!(
            "comparison needs at least two reports, got {}",
            reports.len()
        )));
    }
    let segment = &reports[0].test_segment;
    if let Some(r) = reports.iter().find(|r| r.test_segment != *segment) {
        return Err(Error::contract(format!(
            "{} was evaluated on a different test segment",
            r.strategy
        )));
    }
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            strategy: r.strategy,
            rmse: r.rmse,
            smape: r.smape,
            switch_count: r.switch_count,
            simple_count: r.simple_usage.count,
            simple_share: r.simple_usage.share,
            dm_statistic: r.dm_vs_complex.map(|d| d.statistic),
            dm_p_value: r.dm_vs_complex.map(|d| d.p_value),
        })
        .collect();
    rows.sort_by(|a, b| a.rmse.total_cmp(&b.rmse));
    Ok(ComparisonTable {
        test_segment: segment.clone(),
        rows,
    })
}
