//! CSV traces and event logs.
//!
//! A trace has one row per grid point with columns
//! `t, x_e, y_e, theta_e, V, v, omega, event_flag`. The event log has one row
//! per transmission: index, time, payload size and the coefficients
//! `v_a0 .. v_ap, omega_a0 .. omega_ap` (a single coefficient per channel
//! for held inputs).

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{ensure, Context, Result};
use etpc_core::SimTrace;
use serde::{Deserialize, Serialize};

pub const TRACE_HEADER: [&str; 8] = ["t", "x_e", "y_e", "theta_e", "V", "v", "omega", "event_flag"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x_e: f64,
    pub y_e: f64,
    pub theta_e: f64,
    #[serde(rename = "V")]
    pub v_lyap: f64,
    pub v: f64,
    pub omega: f64,
    pub event_flag: u8,
}

pub fn trace_rows(trace: &SimTrace) -> impl Iterator<Item = TraceRow> + '_ {
    (0..trace.len()).map(move |i| {
        let x = trace.states[i];
        let u = trace.inputs[i];
        TraceRow {
            t: trace.time(i),
            x_e: x.x_e,
            y_e: x.y_e,
            theta_e: x.theta_e,
            v_lyap: trace.v[i],
            v: u.v,
            omega: u.omega,
            event_flag: trace.event_flags[i] as u8,
        }
    })
}

pub fn write_trace<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace_rows(trace) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let degree = trace.events.iter().map(|e| e.packet.degree()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "t_k".into(), "payload_bytes".into()];
    for channel in ["v", "omega"] {
        header.extend((0..=degree).map(|j| format!("{channel}_a{j}")));
    }
    w.write_record(&header)?;
    for (k, ev) in trace.events.iter().enumerate() {
        let mut record = vec![k.to_string(), ev.t.to_string(), ev.payload_bytes.to_string()];
        for channel in 0..2 {
            let column = ev.packet.column(channel);
            record.extend((0..=degree).map(|j| column.get(j).copied().unwrap_or(0.0).to_string()));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    ensure!(header == TRACE_HEADER, "unexpected trace columns {header:?}");
    let rows = r.deserialize().collect::<Result<Vec<TraceRow>, _>>().context("malformed trace row")?;
    ensure!(!rows.is_empty(), "trace has no rows");
    Ok(rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_trace(std::io::BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}

/// Writes `rows` with a header to a new file at `path`.
pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(file))
}
