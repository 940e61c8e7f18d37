//! Long-format CSVs for plotting: Lyapunov curves, traced paths, event
//! rasters and per-run bounds.

use std::path::Path;

use anyhow::Result;
use etpc_core::SimTrace;
use serde::Serialize;

use crate::batch::{BatchOutput, KeptTrace};
use crate::io::write_rows;

#[derive(Serialize)]
struct VRow<'a> {
    path: &'a str,
    strategy: &'a str,
    t: f64,
    #[serde(rename = "V")]
    v: f64,
}

#[derive(Serialize)]
struct PathRow<'a> {
    path: &'a str,
    strategy: &'a str,
    t: f64,
    x_r: f64,
    y_r: f64,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct EventRow<'a> {
    path: &'a str,
    strategy: &'a str,
    k: usize,
    t_k: f64,
}

#[derive(Serialize)]
struct BoundRow<'a> {
    path: &'a str,
    strategy: &'a str,
    ic: usize,
    status: &'a str,
    eps1_sq: Option<f64>,
    n_t: Option<usize>,
    n_s: Option<usize>,
}

/// Writes `v_curves.csv`, `paths_traced.csv` and `event_raster.csv` into
/// `dir` for the given traces.
pub fn write_trace_plots(dir: &Path, traces: &[KeptTrace]) -> Result<()> {
    let points = || traces.iter().flat_map(|k| (0..k.trace.len()).map(move |i| (k, i)));
    write_rows(
        &dir.join("v_curves.csv"),
        points().map(|(k, i)| VRow { path: &k.path, strategy: &k.strategy, t: k.trace.time(i), v: k.trace.v[i] }),
    )?;
    write_rows(
        &dir.join("paths_traced.csv"),
        points().map(|(k, i)| PathRow {
            path: &k.path,
            strategy: &k.strategy,
            t: k.trace.time(i),
            x_r: k.trace.reference[i].x,
            y_r: k.trace.reference[i].y,
            x: k.trace.robot[i].x,
            y: k.trace.robot[i].y,
        }),
    )?;
    write_rows(
        &dir.join("event_raster.csv"),
        traces.iter().flat_map(|k| {
            k.trace.events.iter().enumerate().map(|(n, e)| EventRow { path: &k.path, strategy: &k.strategy, k: n, t_k: e.t })
        }),
    )?;
    Ok(())
}

pub fn write_single_plots(dir: &Path, path: &str, strategy: &str, trace: &SimTrace) -> Result<()> {
    let kept = KeptTrace { path: path.to_string(), strategy: strategy.to_string(), trace: trace.clone() };
    write_trace_plots(dir, std::slice::from_ref(&kept))
}

/// Trace plots for the first initial condition plus `run_bounds.csv`, the
/// per-run data behind the box plots.
pub fn write_batch_plots(dir: &Path, out: &BatchOutput) -> Result<()> {
    write_trace_plots(dir, &out.traces)?;
    write_rows(
        &dir.join("run_bounds.csv"),
        out.records.iter().map(|r| BoundRow {
            path: &r.path,
            strategy: &r.strategy,
            ic: r.ic,
            status: r.status(),
            eps1_sq: r.settled_bound(),
            n_t: r.metrics.as_ref().map(|m| m.n_t),
            n_s: r.metrics.as_ref().map(|m| m.n_s),
        }),
    )
}
