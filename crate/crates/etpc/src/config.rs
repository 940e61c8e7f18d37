//! Experiment configuration.
//!
//! A config is a JSON object. Every key is optional:
//!
//! ```json
//! {
//!   "seed": 1,
//!   "rng": "xoshiro256**",
//!   "n_initial_conditions": 1000,
//!   "duration": 60.0,
//!   "profile": "simulation_study",
//!   "params": { "degree": 2, "delta": [0.0, 0.0] },
//!   "paths": ["circle", "rounded_rectangle", "s_curve", "zigzag"],
//!   "strategies": ["etpc", "etc"],
//!   "derive_ttc": true,
//!   "ttc_period": null,
//!   "initial_error": null
//! }
//! ```
//!
//! `profile` selects the base gains (`simulation_study` or `experimental`);
//! keys under `params` override individual fields of that base. A path is
//! either a catalog name or an object `{name, v_r, omega, initial}`, with
//! `omega` one of `{"kind": "constant", "omega"}`,
//! `{"kind": "piecewise", "levels", "switch_times"}` or
//! `{"kind": "sinusoidal", "amplitude", "frequency"}`. Every path runs for
//! `duration` seconds.
//!
//! Initial errors are drawn uniformly from x_e, y_e in (-2, 2) m and
//! theta_e in (-0.2, 0.2) rad with xoshiro256** seeded by SplitMix64 from
//! `seed`; each draw is `((w >> 11) + 0.5) * 2^-53` for an output word `w`.
//! The same list is shared by every path and strategy.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use etpc_core::{ControllerParams, ErrorState, OmegaProfile, PathSpec, Pose};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// The only generator currently supported.
pub const RNG_NAME: &str = "xoshiro256**";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Etpc,
    Etc,
    Ttc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    SimulationStudy,
    Experimental,
}

impl Profile {
    pub fn params(self) -> ControllerParams {
        match self {
            Profile::SimulationStudy => ControllerParams::simulation_study(),
            Profile::Experimental => ControllerParams::experimental(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub n_initial_conditions: usize,
    /// Experiment duration `T_e` in seconds.
    pub duration: f64,
    pub params: ControllerParams,
    pub paths: Vec<PathSpec>,
    pub strategies: Vec<StrategyKind>,
    /// Add a time-triggered run at the average rate of every ETC and ETPC run.
    pub derive_ttc: bool,
    /// Period of explicitly requested TTC runs. When absent, TTC takes the
    /// rate of an ETC run on the same scenario.
    pub ttc_period: Option<f64>,
    /// Initial error for single runs; defaults to the first sampled one.
    pub initial_error: Option<ErrorState>,
}

impl Default for Config {
    fn default() -> Self {
        let duration = 60.0;
        Config {
            seed: 1,
            n_initial_conditions: etpc_core::sampling::DEFAULT_BATCH_SIZE,
            duration,
            params: ControllerParams::simulation_study(),
            paths: PathSpec::catalog(duration),
            strategies: vec![StrategyKind::Etpc, StrategyKind::Etc],
            derive_ttc: true,
            ttc_period: None,
            initial_error: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    rng: Option<String>,
    n_initial_conditions: Option<usize>,
    duration: Option<f64>,
    #[serde(default)]
    profile: Profile,
    #[serde(default)]
    params: Map<String, Value>,
    paths: Option<Vec<PathEntry>>,
    strategies: Option<Vec<StrategyKind>>,
    derive_ttc: Option<bool>,
    ttc_period: Option<f64>,
    initial_error: Option<ErrorState>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PathEntry {
    Named(String),
    Custom(CustomPath),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomPath {
    name: String,
    v_r: f64,
    omega: OmegaProfile,
    #[serde(default)]
    initial: Pose,
}

/// Catalog path by short or full name.
pub fn catalog_path(name: &str, duration: f64) -> Option<PathSpec> {
    let spec = match name {
        "circle" | "path1" => PathSpec::circle(1.0, duration),
        "rounded_rectangle" | "path2" => PathSpec::rounded_rectangle(duration),
        "s_curve" | "path3" => PathSpec::s_curve(duration),
        "zigzag" | "path4" => PathSpec::zigzag(duration),
        other => return PathSpec::catalog(duration).into_iter().find(|p| p.name == other),
    };
    Some(spec)
}

impl Config {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).context("malformed config")?;
        let defaults = Config::default();
        if let Some(rng) = &raw.rng {
            if rng != RNG_NAME {
                bail!("unsupported rng {rng:?}; only {RNG_NAME:?} is available");
            }
        }
        let duration = raw.duration.unwrap_or(defaults.duration);
        let params = merge_params(raw.profile.params(), raw.params)?;
        let paths = match raw.paths {
            None => PathSpec::catalog(duration),
            Some(entries) => entries
                .into_iter()
                .map(|entry| match entry {
                    PathEntry::Named(name) => {
                        catalog_path(&name, duration).ok_or_else(|| anyhow!("unknown catalog path {name:?}"))
                    }
                    PathEntry::Custom(c) => Ok(PathSpec {
                        name: c.name,
                        v_r: c.v_r,
                        omega: c.omega,
                        initial: c.initial,
                        duration,
                    }),
                })
                .collect::<Result<_>>()?,
        };
        let config = Config {
            seed: raw.seed.unwrap_or(defaults.seed),
            n_initial_conditions: raw.n_initial_conditions.unwrap_or(defaults.n_initial_conditions),
            duration,
            params,
            paths,
            strategies: raw.strategies.unwrap_or(defaults.strategies),
            derive_ttc: raw.derive_ttc.unwrap_or(defaults.derive_ttc),
            ttc_period: raw.ttc_period,
            initial_error: raw.initial_error,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            bail!("duration must be positive");
        }
        if self.n_initial_conditions == 0 {
            bail!("n_initial_conditions must be at least 1");
        }
        if self.paths.is_empty() {
            bail!("no paths configured");
        }
        if self.strategies.is_empty() {
            bail!("no strategies configured");
        }
        for path in &self.paths {
            path.validate().with_context(|| format!("path {:?}", path.name))?;
        }
        if let Some(period) = self.ttc_period {
            if !(period >= self.params.step && period.is_finite()) {
                bail!("ttc_period must be at least one integration step");
            }
        }
        Ok(())
    }

    pub fn find_path(&self, name: &str) -> Option<&PathSpec> {
        self.paths.iter().find(|p| p.name == name).or_else(|| {
            let catalog = catalog_path(name, self.duration)?;
            self.paths.iter().find(|p| p.name == catalog.name)
        })
    }
}

fn merge_params(base: ControllerParams, overrides: Map<String, Value>) -> Result<ControllerParams> {
    let Value::Object(mut fields) = serde_json::to_value(&base)? else {
        unreachable!("parameters serialize to an object");
    };
    for (key, value) in overrides {
        if !fields.contains_key(&key) {
            bail!("unknown controller parameter {key:?}");
        }
        fields.insert(key, value);
    }
    serde_json::from_value(Value::Object(fields)).context("invalid controller parameters")
}
