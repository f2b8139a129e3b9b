//! Demand streams: the hourly per-zone series, synthetic drifted generation,
//! trip ingestion, and the splits used by the harness.

mod csv_io;
mod ingest;
mod split;
mod synthetic;

use chrono::{Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::DemandRecord;

pub use csv_io::{read_demand_csv, read_demand_file, write_demand_csv, write_demand_file};
pub use ingest::{ingest_trips, ingest_trips_from, ColumnMap, IngestOptions, IngestSummary, TripRecord};
pub use split::{temporal_split, top_zones_filter};
pub use synthetic::{generate_synthetic, DriftEvent, DriftKind, SyntheticConfig};

/// Gap-free hourly demand of one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneStream {
    pub zone_id: u32,
    /// Timestamp of `demand[0]`, on the hour.
    pub start: NaiveDateTime,
    pub demand: Vec<f64>,
}

impl ZoneStream {
    pub fn new(zone_id: u32, start: NaiveDateTime, demand: Vec<f64>) -> Result<Self> {
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(Error::contract(format!("stream start {start} is not on the hour")));
        }
        if let Some(v) = demand.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::contract(format!("demand {v} must be finite and non-negative")));
        }
        Ok(Self {
            zone_id,
            start,
            demand,
        })
    }

    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::hours(index as i64)
    }

    /// Timestamp of the last observation.
    pub fn end(&self) -> Option<NaiveDateTime> {
        self.demand.len().checked_sub(1).map(|i| self.timestamp(i))
    }

    /// Position of `ts` in the stream, if it is covered.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let hours = (ts - self.start).num_hours();
        let exact = self.start + Duration::hours(hours) == ts;
        (exact && hours >= 0 && (hours as usize) < self.len()).then_some(hours as usize)
    }

    pub fn total(&self) -> f64 {
        self.demand.iter().sum()
    }

    pub fn records(&self) -> impl Iterator<Item = DemandRecord> + '_ {
        self.demand.iter().enumerate().map(|(i, d)| DemandRecord {
            timestamp: self.timestamp(i),
            zone_id: self.zone_id,
            demand: *d,
        })
    }

    /// Builds a stream from records of one zone in strictly consecutive hours.
    pub fn from_records(records: &[DemandRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::contract("cannot build a stream from zero records"))?;
        for (k, pair) in records.windows(2).enumerate() {
            if pair[1].zone_id != first.zone_id {
                return Err(Error::contract("records of several zones in one stream"));
            }
            if pair[1].timestamp - pair[0].timestamp != Duration::hours(1) {
                return Err(Error::contract(format!(
                    "zone {}: record {} at {} does not follow {} by one hour",
                    first.zone_id,
                    k + 1,
                    pair[1].timestamp,
                    pair[0].timestamp
                )));
            }
        }
        Self::new(
            first.zone_id,
            first.timestamp,
            records.iter().map(|r| r.demand).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2012, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn index_and_timestamps() {
        let s = ZoneStream::new(4, start(), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.index_of(start() + Duration::hours(2)), Some(2));
        assert_eq!(s.index_of(start() + Duration::hours(3)), None);
        assert_eq!(s.index_of(start() - Duration::hours(1)), None);
        assert_eq!(s.index_of(start() + Duration::minutes(30)), None);
        assert_eq!(s.end(), Some(start() + Duration::hours(2)));
        let back = ZoneStream::from_records(&s.records().collect::<Vec<_>>()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_invalid_streams() {
        assert!(ZoneStream::new(0, start(), vec![-1.0]).is_err());
        assert!(ZoneStream::new(0, start() + Duration::minutes(5), vec![1.0]).is_err());
        let mut recs: Vec<_> = ZoneStream::new(0, start(), vec![1.0, 2.0, 3.0])
            .unwrap()
            .records()
            .collect();
        recs.remove(1);
        assert!(ZoneStream::from_records(&recs).is_err());
    }
}
