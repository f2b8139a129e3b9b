use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::detectors::DetectorConfig;
use crate::error::{Error, Result};
use crate::models::TrainingConfig;
use crate::streams::SyntheticConfig;
use crate::strategies::TraceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamSource {
    Synthetic(SyntheticConfig),
    /// Canonical demand CSV (`timestamp,zone_id,demand`).
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    SimpleOnly,
    ComplexOnly,
    EnsembleEwma,
    PageHinkleySwitch,
    AdwinSwitch,
    EddmSwitch,
    #[default]
    Eia,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::SimpleOnly,
        StrategyKind::ComplexOnly,
        StrategyKind::EnsembleEwma,
        StrategyKind::PageHinkleySwitch,
        StrategyKind::AdwinSwitch,
        StrategyKind::EddmSwitch,
        StrategyKind::Eia,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::SimpleOnly => "simple_only",
            StrategyKind::ComplexOnly => "complex_only",
            StrategyKind::EnsembleEwma => "ensemble_ewma",
            StrategyKind::PageHinkleySwitch => "page_hinkley_switch",
            StrategyKind::AdwinSwitch => "adwin_switch",
            StrategyKind::EddmSwitch => "eddm_switch",
            StrategyKind::Eia => "eia",
        }
    }

    /// Strategies whose emitted value is always one of the two model forecasts.
    pub fn is_pure_switch(self) -> bool {
        self != StrategyKind::EnsembleEwma
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse {
                location: "strategy".into(),
                message: format!("unknown strategy `{s}`"),
            })
    }
}

/// Rolling retraining of the complex model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrainConfig {
    pub enabled: bool,
    /// Number of past periods each model is trained on.
    pub window_years: u32,
    /// Period length in hours; `None` uses calendar years.
    pub period_hours: Option<usize>,
}

impl Default for RetrainConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            window_years: 3,
            period_hours: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub stream: StreamSource,
    /// Keep only the `k` zones with the largest total demand.
    #[serde(default)]
    pub top_zones: Option<usize>,
    #[serde(default)]
    pub strategy: StrategyKind,
    /// Last hour of the training segment; scoring starts one hour later.
    pub train_end: NaiveDateTime,
    #[serde(default)]
    pub retrain: RetrainConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub detectors: DetectorConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Overrides the generator seed (synthetic streams) and the training seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    /// A config with defaults everywhere except the required fields.
    pub fn new(stream: StreamSource, train_end: NaiveDateTime) -> Self {
        Self {
            stream,
            top_zones: None,
            strategy: StrategyKind::default(),
            train_end,
            retrain: RetrainConfig::default(),
            training: TrainingConfig::default(),
            trace: TraceConfig::default(),
            detectors: DetectorConfig::default(),
            output_dir: None,
            seed: None,
        }
    }

    /// Reads a `.toml` or `.json` file and applies `key.path=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc = parse_document(&text, path)?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        Self::from_value(doc)
    }

    pub fn from_value(doc: Value) -> Result<Self> {
        let cfg: Self =
            serde_json::from_value(doc).map_err(|e| Error::config(format!("invalid experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }

    /// The config with `seed` pushed into the generator and training settings.
    pub fn resolved(&self) -> Result<Self> {
        let mut cfg = self.clone();
        if let StreamSource::Synthetic(syn) = &mut cfg.stream {
            let Some(seed) = self.seed else {
                return Err(Error::config("synthetic streams need an explicit seed"));
            };
            syn.seed = seed;
        }
        if let Some(seed) = self.seed {
            cfg.training.seed = seed;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate().map_err(as_config)?;
        if self.trace.window == 0 {
            return Err(Error::config("trace window must be at least 1"));
        }
        if let Some(a) = self.trace.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::config(format!("trace alpha {a} outside (0, 1]")));
            }
        }
        if self.top_zones == Some(0) {
            return Err(Error::config("top_zones must be positive"));
        }
        if self.retrain.enabled {
            if self.retrain.window_years == 0 {
                return Err(Error::config("retraining window must be at least one period"));
            }
            if self.retrain.period_hours == Some(0) {
                return Err(Error::config("retraining period must be at least one hour"));
            }
        }
        if let StreamSource::Synthetic(syn) = &self.stream {
            syn.validate().map_err(as_config)?;
        }
        let d = &self.detectors;
        d.page_hinkley.validate().map_err(as_config)?;
        d.adwin.validate().map_err(as_config)?;
        d.eddm.validate().map_err(as_config)?;
        if let Some(cap) = d.adwin_error_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::config(format!("adwin_error_cap {cap} must be positive")));
            }
        }
        if !(d.eddm_quantile > 0.0 && d.eddm_quantile <= 1.0) {
            return Err(Error::config(format!("eddm_quantile {} outside (0, 1]", d.eddm_quantile)));
        }
        Ok(())
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Contract(msg) => Error::Config(msg),
        other => other,
    }
}

/// Parses TOML unless the file name ends in `.json`.
pub fn parse_document(text: &str, path: &Path) -> Result<Value> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })
    } else {
        toml::from_str(text).map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Sets `a.b.c=value` inside a JSON document, creating tables as needed.
///
/// The value is read as JSON when it parses (`3`, `true`, `null`, `[1,2]`,
/// `"text"`) and as a plain string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(format!("malformed override key `{key}`")));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    if !node.is_object() {
        *node = Value::Object(Default::default());
    }
    node.as_object_mut()
        .expect("object")
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use std::io::Write;

    fn ts(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(h, 0, 0).unwrap()
    }

    fn write_temp(name: &str, body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn toml_document_with_overrides() {
        let body = r#"
strategy = "adwin_switch"
train_end = "2012-02-15T23:00:00"
seed = 4

[stream]
kind = "synthetic"
num_hours = 2000
num_zones = 2

[detectors.adwin]
delta = 0.01
"#;
        let (_d, path) = write_temp("exp.toml", body);
        let cfg = ExperimentConfig::load(
            &path,
            &["training.epochs=3".into(), "strategy=eia".into(), "stream.noise_std=0.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.strategy, StrategyKind::Eia);
        assert_eq!(cfg.training.epochs, 3);
        assert_eq!(cfg.detectors.adwin.delta, 0.01);
        assert_eq!(cfg.train_end, ts(2012, 2, 15, 23));
        let StreamSource::Synthetic(syn) = &cfg.stream else { panic!("synthetic expected") };
        assert_eq!((syn.num_hours, syn.num_zones, syn.noise_std), (2000, 2, 0.5));
        let resolved = cfg.resolved().unwrap();
        let StreamSource::Synthetic(syn) = &resolved.stream else { unreachable!() };
        assert_eq!((syn.seed, resolved.training.seed), (4, 4));
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::new(StreamSource::Csv { path: "d.csv".into() }, ts(2013, 1, 1, 0));
        cfg.retrain.enabled = true;
        cfg.top_zones = Some(20);
        let text = serde_json::to_string(&cfg).unwrap();
        let (_d, path) = write_temp("exp.json", &text);
        assert_eq!(ExperimentConfig::load(&path, &[]).unwrap(), cfg);
    }

    #[test]
    fn synthetic_needs_seed() {
        let cfg = ExperimentConfig::new(StreamSource::Synthetic(SyntheticConfig::default()), ts(2012, 1, 20, 0));
        assert!(matches!(cfg.resolved(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_values() {
        let base = ExperimentConfig::new(StreamSource::Csv { path: "x".into() }, ts(2012, 1, 1, 0));
        let mut doc = base.to_value().unwrap();
        apply_override(&mut doc, "detectors.eddm_quantile=1.5").unwrap();
        assert!(matches!(ExperimentConfig::from_value(doc), Err(Error::Config(_))));
        let mut doc = base.to_value().unwrap();
        apply_override(&mut doc, "strategy=bogus").unwrap();
        assert!(ExperimentConfig::from_value(doc).is_err());
        let mut doc = base.to_value().unwrap();
        assert!(apply_override(&mut doc, "novalue").is_err());
        assert!(apply_override(&mut doc, "a..b=1").is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), Value::String(k.as_str().into()));
        }
    }

    #[test]
    fn override_parses_json_scalars() {
        let mut doc = Value::Object(Default::default());
        apply_override(&mut doc, "a.b=3").unwrap();
        apply_override(&mut doc, "a.c=true").unwrap();
        apply_override(&mut doc, "d=some text").unwrap();
        apply_override(&mut doc, "e=null").unwrap();
        assert_eq!(doc["a"]["b"], 3);
        assert_eq!(doc["a"]["c"], true);
        assert_eq!(doc["d"], "some text");
        assert!(doc["e"].is_null());
    }
}
