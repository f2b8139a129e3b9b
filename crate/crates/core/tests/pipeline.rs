use std::fs;

use chrono::{Duration, NaiveDate};
use eia_core::harness::{
    count_switches, emit_outputs, read_forecasts_file, read_report, Experiment, ExperimentConfig, StrategyKind,
    StreamSource,
};
use eia_core::models::{TrainingConfig, REQUIRED_HISTORY};
use eia_core::streams::{generate_synthetic, write_demand_file, DriftEvent, DriftKind, SyntheticConfig};
use eia_core::strategies::read_switch_log;
use eia_core::{ForecastPair, ModelKind};

/// One zone, training until hour 900, a 12-hour drop starting at 06:00 on the
/// day that begins at hour 1008.
fn drop_config() -> ExperimentConfig {
    let syn = SyntheticConfig {
        num_hours: 1200,
        num_zones: 1,
        noise_std: 2.0,
        daily_amplitude: 0.5,
        events: vec![DriftEvent {
            kind: DriftKind::SuddenDrop,
            start_hour: 1014,
            end_hour: 1026,
            magnitude: 0.3,
            affected_zones: vec![],
        }],
        ..SyntheticConfig::default()
    };
    let start = syn.start;
    let mut cfg = ExperimentConfig::new(StreamSource::Synthetic(syn), start + Duration::hours(899));
    cfg.seed = Some(31);
    cfg.training = TrainingConfig {
        epochs: 10,
        hidden_dim: 32,
        learning_rate: 0.01,
        batch_size: 32,
        ..TrainingConfig::default()
    };
    cfg
}

fn scored(rows: &[eia_core::harness::LoggedForecast]) -> Vec<ForecastPair> {
    rows.iter().filter(|r| r.scored).map(|r| r.pair).collect()
}

#[test]
fn forecasts_csv_reproduces_report() {
    let exp = Experiment::prepare(&drop_config()).unwrap();
    let out = exp.run(StrategyKind::Eia).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&out, dir.path()).unwrap();

    let report = read_report(&files.report).unwrap();
    assert_eq!(report, out.report);

    let rows = read_forecasts_file(&files.forecasts).unwrap();
    assert_eq!(rows, out.forecasts);
    let pairs = scored(&rows);
    let mse = pairs.iter().map(|p| (p.emitted - p.actual).powi(2)).sum::<f64>() / pairs.len() as f64;
    assert!((mse.sqrt() - report.rmse).abs() < 1e-9);
    assert_eq!(count_switches(&pairs), report.switch_count);

    let switches = read_switch_log(fs::File::open(&files.switches).unwrap()).unwrap();
    assert_eq!(switches, out.switches);

    let per_day = fs::read_to_string(&files.per_day).unwrap();
    assert_eq!(per_day.lines().count(), report.per_day_table.len() + 1);
    let plot = fs::read_to_string(&files.plot).unwrap();
    assert_eq!(plot.lines().count(), out.forecasts.len() + 1);
}

#[test]
fn simple_only_has_empty_switch_file() {
    let exp = Experiment::prepare(&drop_config()).unwrap();
    let out = exp.run(StrategyKind::SimpleOnly).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&out, dir.path()).unwrap();
    assert_eq!(
        fs::read_to_string(files.switches).unwrap(),
        "timestamp,zone_id,from,to,trigger,ewma_simple,ewma_complex\n"
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let mut dumps = Vec::new();
    for _ in 0..2 {
        let exp = Experiment::prepare(&drop_config()).unwrap();
        let out = exp.run(StrategyKind::EnsembleEwma).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let f = emit_outputs(&out, dir.path()).unwrap();
        dumps.push([f.report, f.forecasts, f.switches, f.per_day, f.plot].map(|p| fs::read(p).unwrap()));
    }
    assert_eq!(dumps[0], dumps[1]);
}

#[test]
fn drop_day_leads_per_day_table() {
    let exp = Experiment::prepare(&drop_config()).unwrap();
    let out = exp.run(StrategyKind::Eia).unwrap();
    let pairs = scored(&out.forecasts);
    let drop_day = NaiveDate::from_ymd_opt(2012, 2, 12).unwrap();
    assert_eq!(exp.streams[0].timestamp(1008).date(), drop_day);

    let expected = pairs
        .iter()
        .filter(|p| p.timestamp.date() == drop_day && p.active_model == ModelKind::Simple)
        .count();
    let top = &out.report.per_day_table[0];
    assert_eq!(top.date, drop_day);
    assert_eq!(top.simple_count, expected);
    assert!(top.simple_count >= 6, "{}", top.simple_predictions());
    assert_eq!(top.total, 24);
    let sorted = out.report.per_day_table.windows(2).all(|w| w[0].simple_count >= w[1].simple_count);
    assert!(sorted);
}

#[test]
fn conditional_improvement_matches_replay() {
    let exp = Experiment::prepare(&drop_config()).unwrap();
    let out = exp.run(StrategyKind::Eia).unwrap();
    let simple_hours: Vec<ForecastPair> = scored(&out.forecasts)
        .into_iter()
        .filter(|p| p.active_model == ModelKind::Simple)
        .collect();
    let rms = |f: &dyn Fn(&ForecastPair) -> f64| {
        (simple_hours.iter().map(|p| (f(p) - p.actual).powi(2)).sum::<f64>() / simple_hours.len() as f64).sqrt()
    };
    let (s, c) = (rms(&|p| p.pred_simple), rms(&|p| p.pred_complex));
    let got = out.report.conditional_improvement.unwrap();
    assert_eq!(got.hours, simple_hours.len());
    assert!((got.rmse_strategy - s).abs() < 1e-9);
    assert!((got.rmse_complex - c).abs() < 1e-9);
    assert!((got.relative_improvement.unwrap() - (1.0 - s / c)).abs() < 1e-9);
}

#[test]
fn csv_source_matches_synthetic_source() {
    let cfg = drop_config();
    let StreamSource::Synthetic(mut syn) = cfg.stream.clone() else { unreachable!() };
    syn.seed = 31;
    let (streams, _) = generate_synthetic(&syn).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demand.csv");
    write_demand_file(&path, &streams).unwrap();

    let mut from_csv = cfg.clone();
    from_csv.stream = StreamSource::Csv { path };
    let a = Experiment::prepare(&cfg).unwrap().run(StrategyKind::PageHinkleySwitch).unwrap();
    let b = Experiment::prepare(&from_csv).unwrap().run(StrategyKind::PageHinkleySwitch).unwrap();
    assert_eq!(a, b);
}

#[test]
fn toml_config_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(
        &path,
        r#"
strategy = "adwin_switch"
train_end = "2012-02-07T11:00:00"
seed = 8
top_zones = 2

[stream]
kind = "synthetic"
num_hours = 1100
num_zones = 3

[training]
epochs = 2
hidden_dim = 8

[retrain]
enabled = true
window_years = 1
period_hours = 500
"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&path, &["detectors.adwin.delta=0.05".into()]).unwrap();
    let exp = Experiment::prepare(&cfg).unwrap();
    assert_eq!(exp.streams.len(), 2);
    assert_eq!(exp.split, 900);
    assert!(exp.split > REQUIRED_HISTORY);
    assert_eq!(exp.schedule.segments().len(), 2);
    let out = exp.run(cfg.strategy).unwrap();
    assert_eq!(out.report.strategy, StrategyKind::AdwinSwitch);
    assert_eq!(out.report.test_segment.forecasts, 2 * 200);
}
