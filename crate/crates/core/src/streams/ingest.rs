use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use chrono::{Duration, DurationRound, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::ZoneStream;
use crate::error::{Error, Result};

/// One taxi trip after parsing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub pickup_datetime: NaiveDateTime,
    pub zone_id: u32,
    pub distance: f64,
    /// Any unit; only zero matters for filtering. Seconds when derived from a dropoff column.
    pub duration: f64,
}

/// Column names of the trip file.
///
/// Exactly one of `duration` and `dropoff_datetime` must be set; with the
/// latter the duration is the dropoff minus the pickup time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub pickup_datetime: String,
    pub zone_id: String,
    pub distance: String,
    pub duration: Option<String>,
    pub dropoff_datetime: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            pickup_datetime: "pickup_datetime".into(),
            zone_id: "zone_id".into(),
            distance: "distance".into(),
            duration: Some("duration".into()),
            dropoff_datetime: None,
        }
    }
}

impl ColumnMap {
    /// Column names of the yellow-taxi trip record files.
    pub fn tlc_yellow() -> Self {
        Self {
            pickup_datetime: "tpep_pickup_datetime".into(),
            zone_id: "PULocationID".into(),
            distance: "trip_distance".into(),
            duration: None,
            dropoff_datetime: Some("tpep_dropoff_datetime".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    pub columns: ColumnMap,
    /// Fail on the first unparseable row instead of skipping it.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub streams: Vec<ZoneStream>,
    pub rows_read: usize,
    pub valid_trips: usize,
    /// Rows dropped because distance or duration was zero.
    pub zero_filtered: usize,
    /// Unparseable rows skipped under the lenient policy.
    pub skipped: usize,
}

const DATETIME_FORMATS: [&str; 4] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%m/%d/%Y %I:%M:%S %p",
];

fn parse_datetime(s: &str) -> std::result::Result<NaiveDateTime, String> {
    let s = s.trim();
    DATETIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| format!("unrecognized datetime `{s}`"))
}

fn parse_non_negative(s: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{what} `{s}` is not a number"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("{what} {v} must be finite and non-negative"));
    }
    Ok(v)
}

struct Columns {
    pickup: usize,
    zone: usize,
    distance: usize,
    duration: Option<usize>,
    dropoff: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, map: &ColumnMap) -> Result<Self> {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::config(format!("trip file has no column `{name}`")))
        };
        let (duration, dropoff) = match (&map.duration, &map.dropoff_datetime) {
            (Some(d), None) => (Some(find(d)?), None),
            (None, Some(d)) => (None, Some(find(d)?)),
            _ => {
                return Err(Error::config(
                    "column map needs exactly one of `duration` and `dropoff_datetime`",
                ))
            }
        };
        Ok(Self {
            pickup: find(&map.pickup_datetime)?,
            zone: find(&map.zone_id)?,
            distance: find(&map.distance)?,
            duration,
            dropoff,
        })
    }

    fn parse(&self, row: &csv::StringRecord) -> std::result::Result<TripRecord, String> {
        let get = |i: usize| row.get(i).ok_or_else(|| format!("row has no column {i}"));
        let pickup = parse_datetime(get(self.pickup)?)?;
        let zone_id = get(self.zone)?
            .trim()
            .parse()
            .map_err(|_| format!("zone `{}` is not a non-negative integer", get(self.zone).unwrap_or("")))?;
        let distance = parse_non_negative(get(self.distance)?, "distance")?;
        let duration = match (self.duration, self.dropoff) {
            (Some(i), _) => parse_non_negative(get(i)?, "duration")?,
            (None, Some(i)) => {
                let secs = (parse_datetime(get(i)?)? - pickup).num_seconds();
                if secs < 0 {
                    return Err("dropoff precedes pickup".into());
                }
                secs as f64
            }
            (None, None) => unreachable!("column map validated"),
        };
        Ok(TripRecord {
            pickup_datetime: pickup,
            zone_id,
            distance,
            duration,
        })
    }
}

/// Aggregates trips into gap-free hourly demand per pickup zone.
///
/// Trips with zero distance or zero duration are outliers and dropped. All
/// zones share the hour span of the surviving trips; hours without trips get
/// demand 0.
pub fn ingest_trips_from<R: Read>(reader: R, options: &IngestOptions) -> Result<IngestSummary> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let cols = Columns::resolve(r.headers()?, &options.columns)?;

    let mut counts: BTreeMap<u32, BTreeMap<NaiveDateTime, u64>> = BTreeMap::new();
    let (mut rows_read, mut valid, mut zero_filtered, mut skipped) = (0, 0, 0, 0);
    for (i, row) in r.records().enumerate() {
        rows_read += 1;
        let parsed = row
            .map_err(|e| e.to_string())
            .and_then(|row| cols.parse(&row));
        let trip = match parsed {
            Ok(t) => t,
            Err(message) if options.strict => {
                return Err(Error::Parse {
                    location: format!("trip file line {}", i + 2),
                    message,
                })
            }
            Err(message) => {
                log::debug!("skipping trip line {}: {message}", i + 2);
                skipped += 1;
                continue;
            }
        };
        if trip.distance == 0.0 || trip.duration == 0.0 {
            zero_filtered += 1;
            continue;
        }
        let hour = trip
            .pickup_datetime
            .duration_trunc(Duration::hours(1))
            .map_err(|e| Error::contract(e.to_string()))?;
        *counts.entry(trip.zone_id).or_default().entry(hour).or_default() += 1;
        valid += 1;
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} unparseable trip rows");
    }

    let span = counts
        .values()
        .flat_map(|m| [m.keys().next(), m.keys().next_back()])
        .flatten()
        .fold(None, |acc: Option<(NaiveDateTime, NaiveDateTime)>, t| match acc {
            None => Some((*t, *t)),
            Some((lo, hi)) => Some((lo.min(*t), hi.max(*t))),
        });
    let streams = match span {
        None => Vec::new(),
        Some((lo, hi)) => {
            let hours = (hi - lo).num_hours() as usize + 1;
            counts
                .into_iter()
                .map(|(zone, by_hour)| {
                    let mut demand = vec![0.0; hours];
                    for (t, c) in by_hour {
                        demand[(t - lo).num_hours() as usize] = c as f64;
                    }
                    ZoneStream::new(zone, lo, demand)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(IngestSummary {
        streams,
        rows_read,
        valid_trips: valid,
        zero_filtered,
        skipped,
    })
}

pub fn ingest_trips(path: &Path, options: &IngestOptions) -> Result<IngestSummary> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_trips_from(BufReader::new(f), options)
}
