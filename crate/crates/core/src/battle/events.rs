use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::UserId;

pub const EVENT_LOG_HEADER: &str = "timestamp_ms,user_id,x,y,z,ax,ay,az,event";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Fire,
    Hit,
    Dead,
    None,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Fire => "fire",
            EventKind::Hit => "hit",
            EventKind::Dead => "dead",
            EventKind::None => "none",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fire" => Ok(EventKind::Fire),
            "hit" => Ok(EventKind::Hit),
            "dead" => Ok(EventKind::Dead),
            "none" => Ok(EventKind::None),
            other => Err(format!("unknown event {other:?}")),
        }
    }
}

/// One client-side sample: where a player was, where they aimed, and what
/// happened.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub timestamp_ms: i64,
    pub user: UserId,
    /// World units.
    pub position: [f64; 3],
    /// Degrees.
    pub aim: [f64; 3],
    pub event: EventKind,
}

/// Parses a comma-separated event log. Rows keep file order; every user's
/// timestamps must be non-decreasing.
pub fn parse_event_log<R: BufRead>(source: R) -> Result<Vec<EventRecord>> {
    let mut lines = source.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim_end_matches('\r') == EVENT_LOG_HEADER => {}
        Some(_) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {EVENT_LOG_HEADER:?}"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    }
    let mut records = Vec::new();
    let mut last_seen: HashMap<UserId, i64> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let rec = parse_row(line).map_err(|message| Error::Parse {
            line: lineno,
            message,
        })?;
        if let Some(&prev) = last_seen.get(&rec.user) {
            if rec.timestamp_ms < prev {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!(
                        "timestamp {} of user {} goes back in time (previous {prev})",
                        rec.timestamp_ms, rec.user
                    ),
                });
            }
        }
        last_seen.insert(rec.user, rec.timestamp_ms);
        records.push(rec);
    }
    Ok(records)
}

fn parse_row(line: &str) -> Result<EventRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 9 {
        return Err(format!("expected 9 fields, found {}", fields.len()));
    }
    let num = |idx: usize, name: &str| -> Result<f64, String> {
        let v: f64 = fields[idx]
            .parse()
            .map_err(|_| format!("{name}: not a number: {:?}", fields[idx]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name}: not finite"))
        }
    };
    Ok(EventRecord {
        timestamp_ms: fields[0]
            .parse()
            .map_err(|_| format!("timestamp_ms: not an integer: {:?}", fields[0]))?,
        user: UserId(
            fields[1]
                .parse()
                .map_err(|_| format!("user_id: not an integer: {:?}", fields[1]))?,
        ),
        position: [num(2, "x")?, num(3, "y")?, num(4, "z")?],
        aim: [num(5, "ax")?, num(6, "ay")?, num(7, "az")?],
        event: fields[8].parse()?,
    })
}

pub fn write_event_log<W: Write>(records: &[EventRecord], mut out: W) -> Result<()> {
    writeln!(out, "{EVENT_LOG_HEADER}")?;
    for r in records {
        let [x, y, z] = r.position;
        let [ax, ay, az] = r.aim;
        writeln!(
            out,
            "{},{},{x},{y},{z},{ax},{ay},{az},{}",
            r.timestamp_ms, r.user, r.event
        )?;
    }
    Ok(())
}
