use std::io::{Read, Write};

use chrono::NaiveDateTime;

use super::{SwitchEvent, Trigger};
use crate::error::{Error, Result};
use crate::types::{ModelKind, TIMESTAMP_FORMAT};

/// A switch event annotated with its zone and both EWMA errors at that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchRecord {
    pub zone_id: u32,
    pub event: SwitchEvent,
    pub ewma_simple: Option<f64>,
    pub ewma_complex: Option<f64>,
}

const HEADER: [&str; 7] = [
    "timestamp",
    "zone_id",
    "from",
    "to",
    "trigger",
    "ewma_simple",
    "ewma_complex",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the switch-event CSV; an empty slice produces the header only.
pub fn write_switch_log<W: Write>(writer: W, records: &[SwitchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.event.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            r.zone_id.to_string(),
            r.event.from_model.to_string(),
            r.event.to_model.to_string(),
            r.event.trigger.to_string(),
            fmt_opt(r.ewma_simple),
            fmt_opt(r.ewma_complex),
        ])?;
    }
    w.flush().map_err(|e| Error::io("switch log", e))?;
    Ok(())
}

pub fn read_switch_log<R: Read>(reader: R) -> Result<Vec<SwitchRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let loc = || format!("switch log row {}", i + 1);
        let field = |k: usize| row.get(k).ok_or_else(|| Error::Parse {
            location: loc(),
            message: format!("missing column {}", HEADER[k]),
        });
        let parse_f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|e| Error::Parse {
                location: loc(),
                message: format!("{e}"),
            })
        };
        let timestamp = NaiveDateTime::parse_from_str(field(0)?, TIMESTAMP_FORMAT).map_err(|e| Error::Parse {
            location: loc(),
            message: format!("{e}"),
        })?;
        let zone_id = field(1)?.parse().map_err(|e| Error::Parse {
            location: loc(),
            message: format!("{e}"),
        })?;
        let from_model: ModelKind = field(2)?.parse()?;
        let to_model: ModelKind = field(3)?.parse()?;
        let trigger: Trigger = field(4)?.parse()?;
        out.push(SwitchRecord {
            zone_id,
            event: SwitchEvent {
                timestamp,
                from_model,
                to_model,
                trigger,
            },
            ewma_simple: parse_f(field(5)?)?,
            ewma_complex: parse_f(field(6)?)?,
        });
    }
    Ok(out)
}
