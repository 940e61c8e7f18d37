//! Monte Carlo batches over paths, strategies and sampled initial errors.

use anyhow::Result;
use etpc_core::metrics::reduction_percent;
use etpc_core::{
    compute_metrics, derive_ttc_period, quartiles, run, sample_initial_conditions, ErrorState, PathSpec, Quartiles,
    RunMetrics, Scenario, SimTrace, Strategy,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, StrategyKind, RNG_NAME};

/// A run counts as degraded when its bound exceeds this multiple of
/// `epsilon^2`, when it never reached the level set, or when it faulted.
pub const DEGRADED_FACTOR: f64 = 10.0;

/// Reference median reductions (ETPC vs ETC, percent) in steady-state and
/// transient event counts for the four catalog paths, reported next to the
/// measured ones. The catalog only approximates the original path shapes, so
/// these are comparison points, not targets.
pub const REFERENCE_REDUCTIONS: [(&str, f64, f64); 4] = [
    ("path1-circle", 70.3, 38.1),
    ("path2-rounded-rectangle", 62.7, 38.9),
    ("path3-s-curve", 67.3, 22.8),
    ("path4-zigzag", 77.0, 38.9),
];

/// Display order of run labels.
const LABELS: [&str; 5] = ["etpc", "etc", "ttc", "ttc1", "ttc2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub path: String,
    /// `etpc`, `etc`, `ttc`, or `ttc1` / `ttc2` for time-triggered runs
    /// matched to an ETC / ETPC run.
    pub strategy: String,
    pub ic: usize,
    pub initial_error: ErrorState,
    pub period: Option<f64>,
    pub metrics: Option<RunMetrics>,
    pub fault: Option<String>,
}

impl RunRecord {
    pub fn status(&self) -> &'static str {
        match (&self.metrics, &self.fault) {
            (_, Some(_)) => "fault",
            (Some(m), None) if m.converged() => "converged",
            _ => "non_converged",
        }
    }

    /// The observed ultimate bound, or `None` if the run did not settle.
    pub fn settled_bound(&self) -> Option<f64> {
        self.metrics.as_ref().and_then(|m| m.eps1_sq)
    }

    pub fn degraded(&self, eps_sq: f64) -> bool {
        self.settled_bound().is_none_or(|b| b > DEGRADED_FACTOR * eps_sq)
    }
}

/// Flat form of a [`RunRecord`] for `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow<'a> {
    pub path: &'a str,
    pub strategy: &'a str,
    pub ic: usize,
    pub x_e0: f64,
    pub y_e0: f64,
    pub theta_e0: f64,
    pub period: Option<f64>,
    pub status: &'static str,
    pub t_c: Option<f64>,
    pub n_t: Option<usize>,
    pub n_s: Option<usize>,
    pub eps1_sq: Option<f64>,
    pub min_inter_event: Option<f64>,
    pub mean_inter_event: Option<f64>,
    pub total_events: Option<usize>,
    pub payload_bytes: Option<usize>,
    pub fault: Option<&'a str>,
}

impl<'a> From<&'a RunRecord> for RunRow<'a> {
    fn from(r: &'a RunRecord) -> Self {
        let m = r.metrics.as_ref();
        RunRow {
            path: &r.path,
            strategy: &r.strategy,
            ic: r.ic,
            x_e0: r.initial_error.x_e,
            y_e0: r.initial_error.y_e,
            theta_e0: r.initial_error.theta_e,
            period: r.period,
            status: r.status(),
            t_c: m.and_then(|m| m.t_c),
            n_t: m.map(|m| m.n_t),
            n_s: m.map(|m| m.n_s),
            eps1_sq: m.and_then(|m| m.eps1_sq),
            min_inter_event: m.and_then(|m| m.min_inter_event),
            mean_inter_event: m.and_then(|m| m.mean_inter_event),
            total_events: m.map(|m| m.total_events),
            payload_bytes: m.map(|m| m.total_payload_bytes),
            fault: r.fault.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub path: String,
    pub strategy: String,
    pub runs: usize,
    pub converged: usize,
    pub non_converged: usize,
    pub faults: usize,
    /// Over all runs that completed.
    pub n_t: Option<Quartiles>,
    pub n_s: Option<Quartiles>,
    pub total_events: Option<Quartiles>,
    /// Over converged runs only.
    pub t_c: Option<Quartiles>,
    pub eps1_sq: Option<Quartiles>,
    /// Median bound over all runs, ranking unsettled runs above every
    /// settled one; `None` when that median is unbounded.
    pub eps1_sq_median_all: Option<f64>,
    pub degraded_fraction: f64,
    pub payload_bytes_per_event: Option<f64>,
    pub period: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub path: String,
    /// Percentage reduction of the ETPC median relative to the ETC median.
    pub n_s_percent: Option<f64>,
    pub n_t_percent: Option<f64>,
    pub reference_n_s_percent: Option<f64>,
    pub reference_n_t_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub rng: String,
    pub seed: u64,
    pub n_initial_conditions: usize,
    pub duration: f64,
    pub epsilon_sq: f64,
    pub degree: usize,
    pub total_runs: usize,
    pub total_faults: usize,
    pub groups: Vec<GroupSummary>,
    pub reductions: Vec<Reduction>,
}

impl BatchSummary {
    pub fn group(&self, path: &str, strategy: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.path == path && g.strategy == strategy)
    }

    pub fn reduction(&self, path: &str) -> Option<&Reduction> {
        self.reductions.iter().find(|r| r.path == path)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// The trace of one run kept for plotting.
#[derive(Debug, Clone)]
pub struct KeptTrace {
    pub path: String,
    pub strategy: String,
    pub trace: SimTrace,
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub records: Vec<RunRecord>,
    pub summary: BatchSummary,
    /// Traces of the first initial condition on every path, if requested.
    pub traces: Vec<KeptTrace>,
}

/// Number of runs a batch will execute.
pub fn planned_runs(config: &Config) -> usize {
    let per_ic: usize = config
        .strategies
        .iter()
        .map(|k| match k {
            StrategyKind::Ttc => 1,
            _ => 1 + config.derive_ttc as usize,
        })
        .sum();
    per_ic * config.paths.len() * config.n_initial_conditions
}

pub fn run_batch(config: &Config, keep_first_traces: bool) -> Result<BatchOutput> {
    config.validate()?;
    let ics = sample_initial_conditions(config.n_initial_conditions, config.seed);
    let jobs: Vec<(usize, usize)> =
        (0..config.paths.len()).flat_map(|p| (0..ics.len()).map(move |i| (p, i))).collect();
    let results: Vec<(Vec<RunRecord>, Vec<KeptTrace>)> = jobs
        .par_iter()
        .map(|&(p, i)| run_job(config, &config.paths[p], i, ics[i], keep_first_traces && i == 0))
        .collect();

    let mut records = Vec::new();
    let mut traces = Vec::new();
    for (r, t) in results {
        records.extend(r);
        traces.extend(t);
    }
    let summary = summarize(config, &records);
    Ok(BatchOutput { records, summary, traces })
}

fn run_job(config: &Config, path: &PathSpec, ic: usize, x0: ErrorState, keep: bool) -> (Vec<RunRecord>, Vec<KeptTrace>) {
    let mut scenario = Scenario::new(path.clone(), config.params.clone(), x0);
    scenario.duration = config.duration;
    scenario.seed = config.seed;

    let mut records = Vec::new();
    let mut kept = Vec::new();
    let mut etc_trace: Option<Option<SimTrace>> = None;
    let mut execute = |label: &str, strategy: Option<Strategy>, records: &mut Vec<RunRecord>| {
        let period = match strategy {
            Some(Strategy::Ttc { period }) => Some(period),
            _ => None,
        };
        let outcome = match strategy {
            Some(s) => run(&scenario, s).map_err(|e| e.to_string()),
            None => Err("source run faulted".to_string()),
        };
        records.push(RunRecord {
            path: path.name.clone(),
            strategy: label.to_string(),
            ic,
            initial_error: x0,
            period,
            metrics: outcome.as_ref().ok().map(|tr| compute_metrics(tr, config.params.epsilon_sq)),
            fault: outcome.as_ref().err().cloned(),
        });
        if keep {
            if let Ok(tr) = &outcome {
                kept.push(KeptTrace { path: path.name.clone(), strategy: label.to_string(), trace: tr.clone() });
            }
        }
        outcome.ok()
    };

    for kind in &config.strategies {
        match kind {
            StrategyKind::Etpc | StrategyKind::Etc => {
                let (label, ttc_label, strategy) = match kind {
                    StrategyKind::Etpc => ("etpc", "ttc2", Strategy::Etpc),
                    _ => ("etc", "ttc1", Strategy::Etc),
                };
                let outcome = execute(label, Some(strategy), &mut records);
                if config.derive_ttc {
                    let ttc = outcome.as_ref().map(|tr| Strategy::Ttc { period: derive_ttc_period(tr) });
                    execute(ttc_label, ttc, &mut records);
                }
                if *kind == StrategyKind::Etc {
                    etc_trace = Some(outcome);
                }
            }
            StrategyKind::Ttc => {
                let strategy = match config.ttc_period {
                    Some(period) => Some(Strategy::Ttc { period }),
                    None => {
                        let source = etc_trace.get_or_insert_with(|| run(&scenario, Strategy::Etc).ok());
                        source.as_ref().map(|tr| Strategy::Ttc { period: derive_ttc_period(tr) })
                    }
                };
                execute("ttc", strategy, &mut records);
            }
        }
    }
    (records, kept)
}

fn quartiles_of(values: impl Iterator<Item = f64>) -> Option<Quartiles> {
    quartiles(&values.collect::<Vec<_>>())
}

/// Aggregates run records. The result does not depend on record order
/// within a group.
pub fn summarize(config: &Config, records: &[RunRecord]) -> BatchSummary {
    let eps_sq = config.params.epsilon_sq;
    let mut groups = Vec::new();
    for path in &config.paths {
        for label in LABELS {
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.path == path.name && r.strategy == label).collect();
            if runs.is_empty() {
                continue;
            }
            let done: Vec<&RunMetrics> = runs.iter().filter_map(|r| r.metrics.as_ref()).collect();
            let conv: Vec<&RunMetrics> = done.iter().copied().filter(|m| m.converged()).collect();
            let events: usize = done.iter().map(|m| m.total_events).sum();
            let bytes: usize = done.iter().map(|m| m.total_payload_bytes).sum();
            let mut bounds: Vec<f64> = runs.iter().map(|r| r.settled_bound().unwrap_or(f64::INFINITY)).collect();
            bounds.sort_by(f64::total_cmp);
            let median_all = etpc_core::metrics::quantile_sorted(&bounds, 0.5);
            groups.push(GroupSummary {
                path: path.name.clone(),
                strategy: label.to_string(),
                runs: runs.len(),
                converged: conv.len(),
                non_converged: done.len() - conv.len(),
                faults: runs.len() - done.len(),
                n_t: quartiles_of(done.iter().map(|m| m.n_t as f64)),
                n_s: quartiles_of(done.iter().map(|m| m.n_s as f64)),
                total_events: quartiles_of(done.iter().map(|m| m.total_events as f64)),
                t_c: quartiles_of(conv.iter().filter_map(|m| m.t_c)),
                eps1_sq: quartiles_of(conv.iter().filter_map(|m| m.eps1_sq)),
                eps1_sq_median_all: median_all.is_finite().then_some(median_all),
                degraded_fraction: runs.iter().filter(|r| r.degraded(eps_sq)).count() as f64 / runs.len() as f64,
                payload_bytes_per_event: (events > 0).then(|| bytes as f64 / events as f64),
                period: quartiles_of(runs.iter().filter_map(|r| r.period)),
            });
        }
    }

    let median = |path: &str, label: &str, pick: fn(&GroupSummary) -> Option<Quartiles>| {
        groups.iter().find(|g| g.path == path && g.strategy == label).and_then(pick).map(|q| q.median)
    };
    let reductions = config
        .paths
        .iter()
        .filter(|p| groups.iter().any(|g| g.path == p.name && g.strategy == "etpc"))
        .filter(|p| groups.iter().any(|g| g.path == p.name && g.strategy == "etc"))
        .map(|p| {
            let pct = |pick: fn(&GroupSummary) -> Option<Quartiles>| {
                Some(reduction_percent(median(&p.name, "etc", pick)?, median(&p.name, "etpc", pick)?))
                    .filter(|x| x.is_finite())
            };
            let reference = REFERENCE_REDUCTIONS.iter().find(|(name, _, _)| *name == p.name);
            Reduction {
                path: p.name.clone(),
                n_s_percent: pct(|g| g.n_s),
                n_t_percent: pct(|g| g.n_t),
                reference_n_s_percent: reference.map(|x| x.1),
                reference_n_t_percent: reference.map(|x| x.2),
            }
        })
        .collect();

    BatchSummary {
        rng: RNG_NAME.to_string(),
        seed: config.seed,
        n_initial_conditions: config.n_initial_conditions,
        duration: config.duration,
        epsilon_sq: eps_sq,
        degree: config.params.degree,
        total_runs: records.len(),
        total_faults: records.iter().filter(|r| r.fault.is_some()).count(),
        groups,
        reductions,
    }
}
