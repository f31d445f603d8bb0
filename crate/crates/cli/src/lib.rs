//! Experiments for the target-guarding game: config loading, Monte Carlo
//! batches comparing cooperative and noncooperative attackers, single-run
//! demos with CSV and SVG output, and a certification sweep.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod demo;
pub mod error;
pub mod montecarlo;
pub mod svg;
pub mod verify;

pub use config::{load_config, ExperimentConfig};
pub use demo::{run_simulation_demo, Demo};
pub use error::{CliError, Result};
pub use montecarlo::{run_montecarlo, StatsTable};
pub use verify::{verify, VerifyReport};
