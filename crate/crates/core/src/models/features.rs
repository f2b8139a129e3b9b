//! Input encoding for the feedforward forecaster.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HOURLY_LAGS: usize = 24;
pub const WEEKLY_LAGS: usize = 4;
pub const HOURS_PER_WEEK: usize = 168;
/// Prior hours a zone must have before a feature vector can be built.
pub const REQUIRED_HISTORY: usize = WEEKLY_LAGS * HOURS_PER_WEEK + HOURLY_LAGS;
/// Number of feature entries that do not depend on the zone count.
pub const FIXED_FEATURES: usize = 7 + HOURLY_LAGS + WEEKLY_LAGS + 4;

/// Offset of the first demand-valued entry (hourly lags) in the flattened vector.
pub fn lag_offset(num_zones: usize) -> usize {
    num_zones + 7
}

pub fn feature_dim(num_zones: usize) -> usize {
    num_zones + FIXED_FEATURES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub zone_onehot: Vec<f64>,
    /// Monday first.
    pub weekday_onehot: [f64; 7],
    /// Demand of the previous 24 hours, oldest first.
    pub hourly_lags: [f64; HOURLY_LAGS],
    /// Demand at the same hour 1, 2, 3 and 4 weeks earlier, in that order.
    pub weekly_lags: [f64; WEEKLY_LAGS],
    pub cos_hour: f64,
    pub sin_hour: f64,
    pub cos_month: f64,
    pub sin_month: f64,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.zone_onehot.len() + FIXED_FEATURES
    }

    /// Flattens in the order zone, weekday, hourly lags, weekly lags, cyclical terms.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&self.zone_onehot);
        out.extend_from_slice(&self.weekday_onehot);
        out.extend_from_slice(&self.hourly_lags);
        out.extend_from_slice(&self.weekly_lags);
        out.extend_from_slice(&[self.cos_hour, self.sin_hour, self.cos_month, self.sin_month]);
        out
    }
}

/// Cosine/sine encoding of hour-of-day (period 24) and month (period 12, January at angle 0).
pub fn cyclical_features(hour: u32, month: u32) -> Result<(f64, f64, f64, f64)> {
    if hour > 23 {
        return Err(Error::contract(format!("hour {hour} outside 0..=23")));
    }
    if !(1..=12).contains(&month) {
        return Err(Error::contract(format!("month {month} outside 1..=12")));
    }
    let h = f64::from(hour) * 2.0 * PI / 24.0;
    let m = f64::from(month - 1) * 2.0 * PI / 12.0;
    Ok((h.cos(), h.sin(), m.cos(), m.sin()))
}

/// Builds the feature vector for the hour `timestamp`.
///
/// `history` holds the zone's demand for the hours strictly before
/// `timestamp`, most recent last, with no gaps. `zone_index` is the dense
/// position of the zone among the `num_zones` zones of the experiment.
pub fn build_features(
    history: &[f64],
    timestamp: NaiveDateTime,
    zone_index: usize,
    num_zones: usize,
) -> Result<FeatureVector> {
    if zone_index >= num_zones {
        return Err(Error::contract(format!(
            "zone index {zone_index} outside 0..{num_zones}"
        )));
    }
    if history.len() < REQUIRED_HISTORY {
        return Err(Error::InsufficientHistory {
            needed: REQUIRED_HISTORY,
            got: history.len(),
        });
    }
    let n = history.len();

    let mut zone_onehot = vec![0.0; num_zones];
    zone_onehot[zone_index] = 1.0;

    let mut weekday_onehot = [0.0; 7];
    weekday_onehot[timestamp.weekday().num_days_from_monday() as usize] = 1.0;

    let mut hourly_lags = [0.0; HOURLY_LAGS];
    hourly_lags.copy_from_slice(&history[n - HOURLY_LAGS..]);

    // history[n - j] is the demand j hours before `timestamp`.
    let weekly_lags: [f64; WEEKLY_LAGS] =
        std::array::from_fn(|k| history[n - (k + 1) * HOURS_PER_WEEK]);

    let (cos_hour, sin_hour, cos_month, sin_month) =
        cyclical_features(timestamp.hour(), timestamp.month())?;

    Ok(FeatureVector {
        zone_onehot,
        weekday_onehot,
        hourly_lags,
        weekly_lags,
        cos_hour,
        sin_hour,
        cos_month,
        sin_month,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn ts(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(h, 0, 0)
            .unwrap()
    }

    #[test]
    fn cyclical_identities() {
        let (c, s, cm, sm) = cyclical_features(0, 1).unwrap();
        assert_eq!((c, s, cm, sm), (1.0, 0.0, 1.0, 0.0));
        let (c, s, _, _) = cyclical_features(6, 1).unwrap();
        assert!(c.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        let (c, s, _, _) = cyclical_features(12, 7).unwrap();
        assert!((c + 1.0).abs() < 1e-12 && s.abs() < 1e-12);
        for h in 0..24 {
            for m in 1..=12 {
                let (c, s, cm, sm) = cyclical_features(h, m).unwrap();
                assert!((c * c + s * s - 1.0).abs() < 1e-12);
                assert!((cm * cm + sm * sm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cyclical_rejects_out_of_range() {
        assert!(cyclical_features(24, 1).is_err());
        assert!(cyclical_features(0, 0).is_err());
        assert!(cyclical_features(0, 13).is_err());
    }

    #[test]
    fn constant_history() {
        let h = vec![7.5; REQUIRED_HISTORY];
        let f = build_features(&h, ts(2015, 1, 26, 16), 0, 1).unwrap();
        assert_eq!(f.hourly_lags, [7.5; 24]);
        assert_eq!(f.weekly_lags, [7.5; 4]);
    }

    #[test]
    fn lag_ordering() {
        let h: Vec<f64> = (0..1000).map(f64::from).collect();
        let f = build_features(&h, ts(2015, 3, 2, 5), 2, 4).unwrap();
        assert_eq!(f.hourly_lags[23], 999.0);
        assert_eq!(f.hourly_lags[0], 976.0);
        assert_eq!(f.weekly_lags, [832.0, 664.0, 496.0, 328.0]);
    }

    #[test]
    fn onehot_conventions() {
        let h = vec![1.0; REQUIRED_HISTORY];
        // 2015-01-26 was a Monday
        let f = build_features(&h, ts(2015, 1, 26, 0), 3, 20).unwrap();
        assert_eq!(f.weekday_onehot, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.zone_onehot.len(), 20);
        assert_eq!(f.zone_onehot[3], 1.0);
        assert_eq!(f.zone_onehot.iter().sum::<f64>(), 1.0);
        let sunday = build_features(&h, ts(2015, 2, 1, 0), 3, 20).unwrap();
        assert_eq!(sunday.weekday_onehot[6], 1.0);
        assert_eq!(f.dim(), 20 + 7 + 24 + 4 + 4);
        assert_eq!(f.to_vec().len(), feature_dim(20));
    }

    #[test]
    fn insufficient_history() {
        let h = vec![1.0; REQUIRED_HISTORY - 1];
        assert!(matches!(
            build_features(&h, ts(2015, 1, 1, 0), 0, 1),
            Err(Error::InsufficientHistory { .. })
        ));
    }
}
