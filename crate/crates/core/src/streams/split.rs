use chrono::NaiveDateTime;

use super::ZoneStream;
use crate::error::{Error, Result};
use crate::types::DemandRecord;

/// Keeps the `k` zones with the largest total demand, ordered by zone id.
///
/// Ties go to the smaller zone id. Asking for more zones than exist keeps
/// all of them and logs a warning.
pub fn top_zones_filter(streams: Vec<ZoneStream>, k: usize) -> Result<Vec<ZoneStream>> {
    if k == 0 {
        return Err(Error::contract("top-zone filter needs k >= 1"));
    }
    if streams.len() < k {
        log::warn!(
            "requested the top {k} zones but only {} are present; keeping all",
            streams.len()
        );
    }
    let mut ranked: Vec<(f64, ZoneStream)> = streams.into_iter().map(|s| (s.total(), s)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.zone_id.cmp(&b.1.zone_id)));
    ranked.truncate(k);
    let mut kept: Vec<ZoneStream> = ranked.into_iter().map(|(_, s)| s).collect();
    kept.sort_by_key(|s| s.zone_id);
    Ok(kept)
}

/// Splits time-ordered records into `timestamp <= train_end` and the rest.
pub fn temporal_split(
    records: &[DemandRecord],
    train_end: NaiveDateTime,
) -> Result<(Vec<DemandRecord>, Vec<DemandRecord>)> {
    let (first, last) = match (records.first(), records.last()) {
        (Some(f), Some(l)) => (f.timestamp, l.timestamp),
        _ => return Err(Error::contract("cannot split an empty stream")),
    };
    if train_end < first || train_end > last {
        return Err(Error::contract(format!(
            "split point {train_end} outside stream span {first}..={last}"
        )));
    }
    let cut = records.partition_point(|r| r.timestamp <= train_end);
    Ok((records[..cut].to_vec(), records[cut..].to_vec()))
}
