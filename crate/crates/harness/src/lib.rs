//! Experiment harness for the `rculmc-core` samplers.
//!
//! Experiments are described by a TOML [`config::ExperimentConfig`] or picked
//! from [`presets`]. [`run::run`] executes one: trials run in parallel, each on
//! its own ChaCha stream, and are reduced in trial order, so the CSV output
//! depends only on the config and master seed. [`compare`] lines up curves on
//! a shared cost grid and [`validate`] reports the admissibility conditions.

pub mod compare;
pub mod config;
pub mod error;
pub mod oracle;
pub mod presets;
pub mod run;
pub mod validate;

pub use error::{HarnessError, Result};
