//! Configuration, CSV formats, Monte Carlo batches and plotting data for
//! event-triggered polynomial control. The numerics live in `etpc-core`.

pub mod batch;
pub mod config;
pub mod io;
pub mod plot;
pub mod single;

pub use batch::{run_batch, BatchOutput, BatchSummary, GroupSummary, Reduction, RunRecord};
pub use config::{Config, Profile, StrategyKind};
pub use single::{simulate, RunSummary, SingleRun};
