//! Experiment harness around `adafix`: solver sweeps on the toy, Markov-chain,
//! image-denoising and matrix-game operators, theorem-bound suites, CSV traces and
//! SVG convergence plots.

pub mod bounds;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{Experiment, ExperimentConfig, RunPlan, SolverKind, SolverSpec};
pub use error::{CliError, Result};
