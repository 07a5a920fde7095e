//! Event files: JSON lines (one event per line) and a flattened CSV.

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::DecayEvent;
use crate::error::{Error, Result};
use crate::kaon::{Channel, Component};

/// One line of the event file. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub event_id: u64,
    pub component: Component,
    pub channel: Channel,
    /// Metres.
    pub true_vertex: [f64; 3],
    /// Seconds.
    pub true_proper_time: f64,
    /// MeV/c, 2π channels only.
    pub p_true: Option<[[f64; 3]; 2]>,
    /// MeV/c, 2π channels only.
    pub p_meas: Option<[[f64; 3]; 2]>,
}

fn arr(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl EventRecord {
    pub fn new(event: &DecayEvent, measured: Option<[Vector3<f64>; 2]>) -> Self {
        EventRecord {
            event_id: event.event_id,
            component: event.component,
            channel: event.channel,
            true_vertex: arr(&event.true_vertex),
            true_proper_time: event.true_proper_time,
            p_true: event.daughters.map(|[a, b]| [arr(&a), arr(&b)]),
            p_meas: measured.map(|[a, b]| [arr(&a), arr(&b)]),
        }
    }

    pub fn true_vertex(&self) -> Vector3<f64> {
        Vector3::from(self.true_vertex)
    }

    pub fn p_true(&self) -> Option<[Vector3<f64>; 2]> {
        self.p_true.map(|[a, b]| [Vector3::from(a), Vector3::from(b)])
    }

    pub fn p_meas(&self) -> Option<[Vector3<f64>; 2]> {
        self.p_meas.map(|[a, b]| [Vector3::from(a), Vector3::from(b)])
    }
}

pub fn write_events_jsonl<'a, W: Write>(records: impl IntoIterator<Item = &'a EventRecord>, mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events_jsonl<R: BufRead>(input: R) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::EventFormat { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn write_events_csv<'a, W: Write>(records: impl IntoIterator<Item = &'a EventRecord>, mut out: W) -> Result<()> {
    let mut header = vec!["event_id", "component", "channel", "vx", "vy", "vz", "true_proper_time"];
    let momenta = [
        "p1x_true", "p1y_true", "p1z_true", "p2x_true", "p2y_true", "p2z_true",
        "p1x_meas", "p1y_meas", "p1z_meas", "p2x_meas", "p2y_meas", "p2z_meas",
    ];
    header.extend(momenta);
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let [vx, vy, vz] = r.true_vertex;
        write!(out, "{},{},{},{vx},{vy},{vz},{}", r.event_id, label(&r.component), label(&r.channel), r.true_proper_time)?;
        for p in [r.p_true, r.p_meas] {
            match p {
                Some(pair) => {
                    for v in pair.iter().flatten() {
                        write!(out, ",{v}")?;
                    }
                }
                None => write!(out, ",,,,,,")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
