use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ZoneStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    /// Demand multiplied by `magnitude` in `[0, 1)` during the event.
    SuddenDrop,
    /// Demand multiplied by `magnitude` during the event.
    SuddenSpike,
    /// Factor `1 + magnitude * (hours since start)`, frozen at `end_hour` and kept afterwards.
    IncrementalShift,
}

/// A ground-truth drift injected into a synthetic stream over `[start_hour, end_hour)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub kind: DriftKind,
    pub start_hour: usize,
    pub end_hour: usize,
    pub magnitude: f64,
    /// Zones hit by the event; empty means every zone.
    #[serde(default)]
    pub affected_zones: Vec<u32>,
}

impl DriftEvent {
    fn affects(&self, zone: u32) -> bool {
        self.affected_zones.is_empty() || self.affected_zones.contains(&zone)
    }

    /// Multiplicative factor at hour index `t`.
    pub fn factor(&self, zone: u32, t: usize) -> f64 {
        if !self.affects(zone) || t < self.start_hour {
            return 1.0;
        }
        match self.kind {
            DriftKind::SuddenDrop | DriftKind::SuddenSpike => {
                if t < self.end_hour {
                    self.magnitude
                } else {
                    1.0
                }
            }
            DriftKind::IncrementalShift => {
                let elapsed = (t.min(self.end_hour) - self.start_hour) as f64;
                (1.0 + self.magnitude * elapsed).max(0.0)
            }
        }
    }

    fn validate(&self, num_zones: usize) -> Result<()> {
        if self.start_hour >= self.end_hour {
            return Err(Error::contract(format!(
                "drift event needs start_hour < end_hour, got {}..{}",
                self.start_hour, self.end_hour
            )));
        }
        if !self.magnitude.is_finite() {
            return Err(Error::contract("drift magnitude must be finite"));
        }
        match self.kind {
            DriftKind::SuddenDrop if !(0.0..1.0).contains(&self.magnitude) => {
                return Err(Error::contract(format!(
                    "sudden drop magnitude {} outside [0, 1)",
                    self.magnitude
                )))
            }
            DriftKind::SuddenSpike if self.magnitude < 0.0 => {
                return Err(Error::contract("spike magnitude must be non-negative"))
            }
            _ => {}
        }
        if let Some(z) = self.affected_zones.iter().find(|z| **z as usize >= num_zones) {
            return Err(Error::contract(format!("drift event names unknown zone {z}")));
        }
        Ok(())
    }
}

fn default_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2012, 1, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub num_hours: usize,
    pub num_zones: usize,
    pub base_level: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub noise_std: f64,
    pub trend_per_hour: f64,
    pub events: Vec<DriftEvent>,
    pub seed: u64,
    /// Timestamp of hour index 0.
    pub start: NaiveDateTime,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_hours: 24 * 7 * 8,
            num_zones: 1,
            base_level: 100.0,
            daily_amplitude: 0.5,
            weekly_amplitude: 0.2,
            noise_std: 5.0,
            trend_per_hour: 0.0,
            events: Vec::new(),
            seed: 0,
            start: default_start(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_hours == 0 || self.num_zones == 0 {
            return Err(Error::contract("synthetic stream needs at least one hour and one zone"));
        }
        if !(self.base_level > 0.0 && self.base_level.is_finite()) {
            return Err(Error::contract("base level must be positive"));
        }
        for (name, v) in [
            ("daily_amplitude", self.daily_amplitude),
            ("weekly_amplitude", self.weekly_amplitude),
            ("noise_std", self.noise_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::contract(format!("{name} must be finite and non-negative")));
            }
        }
        if !self.trend_per_hour.is_finite() {
            return Err(Error::contract("trend must be finite"));
        }
        if self.start.minute() != 0 || self.start.second() != 0 {
            return Err(Error::contract("synthetic start must be on the hour"));
        }
        self.events.iter().try_for_each(|e| e.validate(self.num_zones))
    }
}

/// Generates one stream per zone (ids `0..num_zones`) together with the injected events.
///
/// ```text
/// demand(z, t) = max(0, [base * (1 + daily * sin(2 pi hour / 24)) * (1 + weekly * weekend)
///                        + trend * t + noise] * prod_events factor(z, t))
/// ```
///
/// `weekend` is 1 on Saturday and Sunday. Noise is drawn hour-major, zone-minor
/// from a seeded generator, so a config always yields the same streams.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(Vec<ZoneStream>, Vec<DriftEvent>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::contract(e.to_string()))?;

    let mut series = vec![Vec::with_capacity(config.num_hours); config.num_zones];
    for t in 0..config.num_hours {
        let ts = config.start + chrono::Duration::hours(t as i64);
        let hour = f64::from(ts.hour());
        let weekend = matches!(ts.weekday(), Weekday::Sat | Weekday::Sun);
        let seasonal = config.base_level
            * (1.0 + config.daily_amplitude * (2.0 * PI * hour / 24.0).sin())
            * (1.0 + config.weekly_amplitude * if weekend { 1.0 } else { 0.0 });
        for (z, out) in series.iter_mut().enumerate() {
            let eps = if config.noise_std > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            let factor: f64 = config.events.iter().map(|e| e.factor(z as u32, t)).product();
            let value = (seasonal + config.trend_per_hour * t as f64 + eps) * factor;
            out.push(value.max(0.0));
        }
    }

    let streams = series
        .into_iter()
        .enumerate()
        .map(|(z, demand)| ZoneStream::new(z as u32, config.start, demand))
        .collect::<Result<Vec<_>>>()?;
    Ok((streams, config.events.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat() -> SyntheticConfig {
        SyntheticConfig {
            num_hours: 500,
            num_zones: 2,
            base_level: 40.0,
            daily_amplitude: 0.0,
            weekly_amplitude: 0.0,
            noise_std: 0.0,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn constant_configuration() {
        let (streams, truth) = generate_synthetic(&flat()).unwrap();
        assert!(truth.is_empty());
        for s in &streams {
            assert!(s.demand.iter().all(|d| *d == 40.0));
        }
    }

    #[test]
    fn annihilating_drop() {
        let mut cfg = flat();
        cfg.daily_amplitude = 0.3;
        let base = generate_synthetic(&cfg).unwrap().0;
        let event = DriftEvent {
            kind: DriftKind::SuddenDrop,
            start_hour: 100,
            end_hour: 110,
            magnitude: 0.0,
            affected_zones: vec![1],
        };
        cfg.events = vec![event.clone()];
        let (streams, truth) = generate_synthetic(&cfg).unwrap();
        assert_eq!(truth, vec![event]);
        for t in 0..500 {
            assert_eq!(streams[0].demand[t], base[0].demand[t]);
            if (100..110).contains(&t) {
                assert_eq!(streams[1].demand[t], 0.0);
            } else {
                assert_eq!(streams[1].demand[t], base[1].demand[t]);
            }
        }
    }

    #[test]
    fn incremental_shift_persists() {
        let mut cfg = flat();
        cfg.events = vec![DriftEvent {
            kind: DriftKind::IncrementalShift,
            start_hour: 10,
            end_hour: 20,
            magnitude: -0.05,
            affected_zones: vec![],
        }];
        let (s, _) = generate_synthetic(&cfg).unwrap();
        assert_eq!(s[0].demand[10], 40.0);
        assert!((s[0].demand[15] - 40.0 * 0.75).abs() < 1e-12);
        assert!((s[0].demand[300] - 40.0 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn weekend_boost() {
        let mut cfg = flat();
        cfg.weekly_amplitude = 0.5;
        // 2012-01-01 is a Sunday, 2012-01-02 a Monday
        let (s, _) = generate_synthetic(&cfg).unwrap();
        assert_eq!(s[0].demand[0], 60.0);
        assert_eq!(s[0].demand[24], 40.0);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = flat();
        cfg.num_hours = 0;
        assert!(generate_synthetic(&cfg).is_err());
        let mut cfg = flat();
        cfg.events = vec![DriftEvent {
            kind: DriftKind::SuddenDrop,
            start_hour: 5,
            end_hour: 5,
            magnitude: 0.5,
            affected_zones: vec![],
        }];
        assert!(generate_synthetic(&cfg).is_err());
        cfg.events[0].end_hour = 6;
        cfg.events[0].magnitude = 1.0;
        assert!(generate_synthetic(&cfg).is_err());
        cfg.events[0].magnitude = 0.5;
        cfg.events[0].affected_zones = vec![9];
        assert!(generate_synthetic(&cfg).is_err());
    }

    proptest! {
        #[test]
        fn deterministic_non_negative(seed in 0u64..1000, noise in 0.0f64..80.0, trend in -0.5f64..0.5) {
            let cfg = SyntheticConfig {
                num_hours: 300,
                num_zones: 2,
                noise_std: noise,
                trend_per_hour: trend,
                seed,
                ..SyntheticConfig::default()
            };
            let (a, _) = generate_synthetic(&cfg).unwrap();
            let (b, _) = generate_synthetic(&cfg).unwrap();
            prop_assert_eq!(&a, &b);
            for s in &a {
                prop_assert!(s.demand.iter().all(|d| d.is_finite() && *d >= 0.0));
            }
        }
    }
}
