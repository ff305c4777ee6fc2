//! Experiment runner behind the `crlab` binary.
//!
//! A run is described by an [`ExperimentConfig`], parsed from the text format
//! documented in [`config`], and produces CSV files plus a `<task>.meta`
//! sidecar holding the seed, a SHA-256 of the rendered config and a
//! timestamp. All randomness comes from ChaCha8 seeded with the config seed,
//! so CSV outputs are byte-identical across runs of the same config.

pub mod config;
pub mod run;
pub mod svg;

pub use config::{parse_config, ConfigError, ExperimentConfig, RawConfig, Task};
pub use run::{run, RunError, RunSummary};
