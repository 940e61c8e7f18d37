//! Per-run evaluation metrics and order statistics.
//!
//! `T_c` is the first grid time with `V <= epsilon^2`. Events at or before
//! `T_c` count as transient (`N_t`, which always includes the event at
//! `t = 0`), later ones as steady state (`N_s`). The observed ultimate bound
//! `eps1_sq` is the largest `V` from `T_c` on.

use alloc::vec::Vec;

use crate::math::floor;
use crate::simulation::SimTrace;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunMetrics {
    /// `None` if `V` never reached the `epsilon^2` level.
    pub t_c: Option<f64>,
    pub n_t: usize,
    pub n_s: usize,
    pub eps1_sq: Option<f64>,
    pub min_inter_event: Option<f64>,
    pub mean_inter_event: Option<f64>,
    pub total_events: usize,
    pub total_payload_bytes: usize,
}

impl RunMetrics {
    pub fn converged(&self) -> bool {
        self.t_c.is_some()
    }
}

pub fn compute_metrics(trace: &SimTrace, eps_sq: f64) -> RunMetrics {
    let bytes = trace.events.iter().map(|e| e.payload_bytes).sum();
    let mut m = metrics_from_series(&trace.times(), &trace.v, &trace.event_times(), eps_sq);
    m.total_payload_bytes = bytes;
    m
}

/// Metrics from raw columns: grid times, `V` on the grid and event times.
/// Payload is left at zero.
pub fn metrics_from_series(times: &[f64], v: &[f64], event_times: &[f64], eps_sq: f64) -> RunMetrics {
    assert_eq!(times.len(), v.len(), "time and V columns differ in length");
    let crossing = v.iter().position(|&x| x <= eps_sq);
    let t_c = crossing.map(|i| times[i]);
    let (n_t, eps1_sq) = match (crossing, t_c) {
        (Some(i), Some(tc)) => {
            let n_t = event_times.iter().filter(|&&t| t <= tc).count();
            let peak = v[i..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (n_t, Some(peak))
        }
        _ => (event_times.len(), None),
    };
    let gaps = inter_event_times(event_times);
    RunMetrics {
        t_c,
        n_t,
        n_s: event_times.len() - n_t,
        eps1_sq,
        min_inter_event: gaps.iter().copied().reduce(f64::min),
        mean_inter_event: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        total_events: event_times.len(),
        total_payload_bytes: 0,
    }
}

pub fn inter_event_times(event_times: &[f64]) -> Vec<f64> {
    event_times.windows(2).map(|w| w[1] - w[0]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Inclusive quantile: linear interpolation between closest ranks at
/// position `q (n - 1)` of the sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Quartiles of `values`, or `None` for an empty sample. NaNs sort last.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Quartiles {
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
    })
}

/// Percentage by which `new` is below `base`.
pub fn reduction_percent(base: f64, new: f64) -> f64 {
    100.0 * (base - new) / base
}
