use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use super::ZoneStream;
use crate::error::{Error, Result};
use crate::types::{DemandRecord, TIMESTAMP_FORMAT};

/// Writes `timestamp,zone_id,demand` rows ordered by timestamp, then zone.
pub fn write_demand_csv<W: Write>(writer: W, streams: &[ZoneStream]) -> Result<()> {
    let mut rows: Vec<DemandRecord> = streams.iter().flat_map(ZoneStream::records).collect();
    rows.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.zone_id.cmp(&b.zone_id)));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "zone_id", "demand"])?;
    for r in rows {
        w.write_record([
            r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            r.zone_id.to_string(),
            r.demand.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("demand csv", e))?;
    Ok(())
}

/// Reads the canonical demand CSV back into per-zone streams sorted by zone id.
///
/// Every zone must cover strictly consecutive hours.
pub fn read_demand_csv<R: Read>(reader: R) -> Result<Vec<ZoneStream>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let expected = ["timestamp", "zone_id", "demand"];
    if headers.iter().ne(expected) {
        return Err(Error::Parse {
            location: "demand csv header".into(),
            message: format!("expected {expected:?}, got {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut zones: BTreeMap<u32, Vec<DemandRecord>> = BTreeMap::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let loc = || format!("demand csv line {}", i + 2);
        let bad = |m: String| Error::Parse { location: loc(), message: m };
        let timestamp = NaiveDateTime::parse_from_str(&row[0], TIMESTAMP_FORMAT)
            .map_err(|e| bad(format!("timestamp `{}`: {e}", &row[0])))?;
        let zone_id: u32 = row[1].parse().map_err(|e| bad(format!("zone `{}`: {e}", &row[1])))?;
        let demand: f64 = row[2].parse().map_err(|e| bad(format!("demand `{}`: {e}", &row[2])))?;
        zones.entry(zone_id).or_default().push(DemandRecord {
            timestamp,
            zone_id,
            demand,
        });
    }
    zones
        .into_values()
        .map(|mut recs| {
            recs.sort_by_key(|r| r.timestamp);
            ZoneStream::from_records(&recs)
        })
        .collect()
}

pub fn write_demand_file(path: &Path, streams: &[ZoneStream]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_demand_csv(BufWriter::new(f), streams)
}

pub fn read_demand_file(path: &Path) -> Result<Vec<ZoneStream>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_demand_csv(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{generate_synthetic, SyntheticConfig};
    use proptest::prelude::*;

    #[test]
    fn canonical_layout() {
        let start = chrono::NaiveDate::from_ymd_opt(2013, 8, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let a = ZoneStream::new(7, start, vec![3.0, 0.5]).unwrap();
        let b = ZoneStream::new(2, start, vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_demand_csv(&mut buf, &[a, b]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "timestamp,zone_id,demand\n\
             2013-08-01T00:00:00,2,1\n\
             2013-08-01T00:00:00,7,3\n\
             2013-08-01T01:00:00,2,2\n\
             2013-08-01T01:00:00,7,0.5\n"
        );
    }

    #[test]
    fn rejects_gaps_and_bad_headers() {
        let gap = "timestamp,zone_id,demand\n2013-08-01T00:00:00,2,1\n2013-08-01T02:00:00,2,1\n";
        assert!(read_demand_csv(gap.as_bytes()).is_err());
        let header = "time,zone,demand\n";
        assert!(read_demand_csv(header.as_bytes()).is_err());
        let junk = "timestamp,zone_id,demand\n2013-08-01T00:00:00,2,abc\n";
        assert!(read_demand_csv(junk.as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn write_read_round_trip(seed in 0u64..500) {
            let cfg = SyntheticConfig { num_hours: 60, num_zones: 3, seed, ..SyntheticConfig::default() };
            let (streams, _) = generate_synthetic(&cfg).unwrap();
            let mut buf = Vec::new();
            write_demand_csv(&mut buf, &streams).unwrap();
            prop_assert_eq!(read_demand_csv(buf.as_slice()).unwrap(), streams);
        }
    }
}
