use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;

use super::analysis::{DayRow, EvaluationReport};
use super::runner::{EwmaPoint, ExperimentOutcome, LoggedForecast};
use crate::error::{Error, Result};
use crate::strategies::write_switch_log;
use crate::types::{ForecastPair, TIMESTAMP_FORMAT};

pub const REPORT_FILE: &str = "report.json";
pub const FORECASTS_FILE: &str = "forecasts.csv";
pub const SWITCHES_FILE: &str = "switches.csv";
pub const PER_DAY_FILE: &str = "per_day.csv";
pub const PLOT_FILE: &str = "plotdata.csv";

const FORECAST_HEADER: [&str; 8] = [
    "timestamp",
    "zone_id",
    "actual",
    "pred_simple",
    "pred_complex",
    "emitted",
    "active_model",
    "scored",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub report: PathBuf,
    pub forecasts: PathBuf,
    pub switches: PathBuf,
    pub per_day: PathBuf,
    pub plot: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            report: dir.join(REPORT_FILE),
            forecasts: dir.join(FORECASTS_FILE),
            switches: dir.join(SWITCHES_FILE),
            per_day: dir.join(PER_DAY_FILE),
            plot: dir.join(PLOT_FILE),
        }
    }
}

fn ts(t: NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the five result files into `dir`, creating it if needed.
///
/// Floats are written in shortest round-trip form, so re-reading a file
/// recovers the exact values.
pub fn emit_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles::in_dir(dir);

    let mut f = create(&files.report)?;
    serde_json::to_writer_pretty(&mut f, &outcome.report)?;
    f.write_all(b"\n")
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(&files.report, e))?;

    write_forecasts_csv(create(&files.forecasts)?, &outcome.forecasts)?;
    write_switch_log(create(&files.switches)?, &outcome.switches)?;
    write_per_day_csv(create(&files.per_day)?, &outcome.report.per_day_table)?;
    write_plot_csv(create(&files.plot)?, &outcome.forecasts, &outcome.ewma)?;
    Ok(files)
}

pub fn write_forecasts_csv<W: Write>(writer: W, rows: &[LoggedForecast]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FORECAST_HEADER)?;
    for r in rows {
        let p = &r.pair;
        w.write_record([
            ts(p.timestamp),
            p.zone_id.to_string(),
            p.actual.to_string(),
            p.pred_simple.to_string(),
            p.pred_complex.to_string(),
            p.emitted.to_string(),
            p.active_model.to_string(),
            r.scored.to_string(),
        ])?;
    }
    finish(w, Path::new(FORECASTS_FILE))
}

pub fn read_forecasts_csv<R: Read>(reader: R) -> Result<Vec<LoggedForecast>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().ne(FORECAST_HEADER) {
        return Err(Error::Parse {
            location: "forecasts csv header".into(),
            message: format!("unexpected columns {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let bad = |k: usize, e: String| Error::Parse {
            location: format!("forecasts csv line {}", i + 2),
            message: format!("{} `{}`: {e}", FORECAST_HEADER[k], &row[k]),
        };
        let num = |k: usize| row[k].parse::<f64>().map_err(|e| bad(k, e.to_string()));
        out.push(LoggedForecast {
            pair: ForecastPair {
                timestamp: NaiveDateTime::parse_from_str(&row[0], TIMESTAMP_FORMAT)
                    .map_err(|e| bad(0, e.to_string()))?,
                zone_id: row[1].parse().map_err(|e: std::num::ParseIntError| bad(1, e.to_string()))?,
                actual: num(2)?,
                pred_simple: num(3)?,
                pred_complex: num(4)?,
                emitted: num(5)?,
                active_model: row[6].parse()?,
            },
            scored: row[7].parse().map_err(|e: std::str::ParseBoolError| bad(7, e.to_string()))?,
        });
    }
    Ok(out)
}

pub fn read_forecasts_file(path: &Path) -> Result<Vec<LoggedForecast>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_forecasts_csv(BufReader::new(f))
}

pub fn read_report(path: &Path) -> Result<EvaluationReport> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn write_per_day_csv<W: Write>(writer: W, rows: &[DayRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "date",
        "zone_id",
        "rmse_improvement",
        "simple_count",
        "total_count",
        "simple_predictions",
    ])?;
    for r in rows {
        w.write_record([
            r.date.to_string(),
            r.zone_id.to_string(),
            r.rmse_improvement.to_string(),
            r.simple_count.to_string(),
            r.total.to_string(),
            r.simple_predictions(),
        ])?;
    }
    finish(w, Path::new(PER_DAY_FILE))
}

/// Forecast curves with both error EWMAs after each observed hour.
pub fn write_plot_csv<W: Write>(writer: W, rows: &[LoggedForecast], ewma: &[EwmaPoint]) -> Result<()> {
    if rows.len() != ewma.len() {
        return Err(Error::contract(format!(
            "{} forecast rows but {} EWMA points",
            rows.len(),
            ewma.len()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "timestamp",
        "zone_id",
        "actual",
        "pred_simple",
        "pred_complex",
        "emitted",
        "ewma_simple",
        "ewma_complex",
    ])?;
    for (r, e) in rows.iter().zip(ewma) {
        let p = &r.pair;
        w.write_record([
            ts(p.timestamp),
            p.zone_id.to_string(),
            p.actual.to_string(),
            p.pred_simple.to_string(),
            p.pred_complex.to_string(),
            p.emitted.to_string(),
            fmt_opt(e.simple),
            fmt_opt(e.complex),
        ])?;
    }
    finish(w, Path::new(PLOT_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ModelKind;
    use chrono::{Duration, NaiveDate};

    fn rows() -> Vec<LoggedForecast> {
        let t0 = NaiveDate::from_ymd_opt(2016, 7, 4).unwrap().and_hms_opt(0, 0, 0).unwrap();
        (0..5)
            .map(|h| LoggedForecast {
                pair: ForecastPair {
                    timestamp: t0 + Duration::hours(h),
                    zone_id: 7,
                    actual: 0.1 * h as f64 + 1.0 / 3.0,
                    pred_simple: 2.0f64.sqrt() * h as f64,
                    pred_complex: std::f64::consts::PI,
                    emitted: std::f64::consts::PI,
                    active_model: if h % 2 == 0 { ModelKind::Complex } else { ModelKind::Simple },
                },
                scored: h > 1,
            })
            .collect()
    }

    #[test]
    fn forecasts_round_trip_exactly() {
        let mut buf = Vec::new();
        write_forecasts_csv(&mut buf, &rows()).unwrap();
        assert_eq!(read_forecasts_csv(buf.as_slice()).unwrap(), rows());
    }

    #[test]
    fn plot_rows_must_align() {
        let mut buf = Vec::new();
        assert!(write_plot_csv(&mut buf, &rows(), &[]).is_err());
        let points = vec![EwmaPoint::default(); 5];
        write_plot_csv(&mut buf, &rows(), &points).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_forecasts_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
