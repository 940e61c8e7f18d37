use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use etpc::batch::planned_runs;
use etpc::config::{Config, StrategyKind};
use etpc::io::{create_file, read_trace_file, write_events, write_rows, write_trace};
use etpc::{plot, run_batch, simulate};
use etpc_core::metrics::metrics_from_series;

#[derive(Parser)]
#[command(name = "etpc", version, about = "Event-triggered polynomial control for unicycle tracking")]
struct Cli {
    /// Override the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace, event log and summary.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        strategy: StrategyKind,
        /// Path name (catalog or custom); defaults to the first configured.
        #[arg(long)]
        path: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emit_plot_data: bool,
    },
    /// Run every path, strategy and sampled initial error in the config.
    Batch {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emit_plot_data: bool,
    },
    /// Recompute run metrics from a trace CSV.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        epsilon_sq: f64,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<Config> {
    let mut config = match path {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn plot_dir(out: &Path) -> Result<PathBuf> {
    let dir = out.join("plot");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, strategy, path, out, emit_plot_data } => {
            let config = load_config(config.as_deref(), cli.seed)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let result = simulate(&config, strategy, path.as_deref())?;
            write_trace(&result.trace, create_file(&out.join("trace.csv"))?)?;
            write_events(&result.trace, create_file(&out.join("events.csv"))?)?;
            write_json(&out.join("summary.json"), &result.summary)?;
            if emit_plot_data {
                let label = result.trace.strategy.label();
                plot::write_single_plots(&plot_dir(&out)?, &result.summary.path, label, &result.trace)?;
            }
            let m = &result.summary.metrics;
            println!(
                "{} on {}: T_c = {}, N_t = {}, N_s = {}, events = {}",
                label_of(strategy),
                result.summary.path,
                m.t_c.map_or("not reached".to_string(), |t| format!("{t:.3} s")),
                m.n_t,
                m.n_s,
                m.total_events
            );
        }
        Command::Batch { config, out, emit_plot_data } => {
            let config = load_config(config.as_deref(), cli.seed)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            eprintln!("running {} simulations", planned_runs(&config));
            let result = run_batch(&config, emit_plot_data)?;
            fs::write(out.join("summary.json"), result.summary.to_json()?)?;
            write_rows(&out.join("runs.csv"), result.records.iter().map(etpc::batch::RunRow::from))?;
            if emit_plot_data {
                plot::write_batch_plots(&plot_dir(&out)?, &result)?;
            }
            for r in &result.summary.reductions {
                let fmt = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.1}%"));
                println!(
                    "{}: N_s reduction {} (reference {}), N_t reduction {} (reference {})",
                    r.path,
                    fmt(r.n_s_percent),
                    fmt(r.reference_n_s_percent),
                    fmt(r.n_t_percent),
                    fmt(r.reference_n_t_percent)
                );
            }
            if result.summary.total_faults > 0 {
                println!("{} of {} runs faulted", result.summary.total_faults, result.summary.total_runs);
            }
        }
        Command::Metrics { trace, epsilon_sq } => {
            let rows = read_trace_file(&trace)?;
            let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
            let v: Vec<f64> = rows.iter().map(|r| r.v_lyap).collect();
            let events: Vec<f64> = rows.iter().filter(|r| r.event_flag != 0).map(|r| r.t).collect();
            let metrics = metrics_from_series(&times, &v, &events, epsilon_sq);
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
    }
    Ok(())
}

fn label_of(kind: StrategyKind) -> &'static str {
    match kind {
        StrategyKind::Etpc => "ETPC",
        StrategyKind::Etc => "ETC",
        StrategyKind::Ttc => "TTC",
    }
}
