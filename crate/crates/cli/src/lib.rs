//! Library side of the `ipa` command: configs, presets, manifests and the
//! subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{execute, iid_config, replay};
pub use config::{DemoConfig, Preset, SimulateConfig};
pub use error::{exit, CliError, CliResult};
pub use manifest::{Invocation, RunManifest, SampleAxis, Summary};
