//! One closed-loop run built from a config.

use anyhow::{anyhow, Context, Result};
use etpc_core::{
    compute_metrics, derive_ttc_period, run, sample_initial_conditions, ControllerParams, ErrorState, RunMetrics,
    Scenario, SimTrace, Strategy,
};
use serde::Serialize;

use crate::config::{Config, StrategyKind};

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub path: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub initial_error: ErrorState,
    pub period: Option<f64>,
    pub params: ControllerParams,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone)]
pub struct SingleRun {
    pub summary: RunSummary,
    pub trace: SimTrace,
}

/// Runs `kind` on the named path (the first configured path if `None`).
pub fn simulate(config: &Config, kind: StrategyKind, path: Option<&str>) -> Result<SingleRun> {
    config.validate()?;
    let spec = match path {
        Some(name) => config.find_path(name).ok_or_else(|| anyhow!("no path named {name:?} in config"))?,
        None => &config.paths[0],
    };
    let x0 = config.initial_error.unwrap_or_else(|| sample_initial_conditions(1, config.seed)[0]);
    let mut scenario = Scenario::new(spec.clone(), config.params.clone(), x0);
    scenario.duration = config.duration;
    scenario.seed = config.seed;

    let strategy = match kind {
        StrategyKind::Etpc => Strategy::Etpc,
        StrategyKind::Etc => Strategy::Etc,
        StrategyKind::Ttc => match config.ttc_period {
            Some(period) => Strategy::Ttc { period },
            None => {
                let etc = run(&scenario, Strategy::Etc).context("ETC run for the TTC period")?;
                Strategy::Ttc { period: derive_ttc_period(&etc) }
            }
        },
    };
    let period = match strategy {
        Strategy::Ttc { period } => Some(period),
        _ => None,
    };
    let trace = run(&scenario, strategy).with_context(|| format!("{} run on {}", strategy.label(), spec.name))?;
    let metrics = compute_metrics(&trace, config.params.epsilon_sq);
    Ok(SingleRun {
        summary: RunSummary {
            path: spec.name.clone(),
            strategy: kind,
            seed: config.seed,
            initial_error: x0,
            period,
            params: config.params.clone(),
            metrics,
        },
        trace,
    })
}
