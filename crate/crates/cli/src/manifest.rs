//! Run manifests: everything needed to reproduce a command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use ipa_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{DemoConfig, SimulateConfig};
use crate::error::{CliError, CliResult};

pub const RUN_FORMAT: &str = "ipa-run/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

/// How the rows and columns of a matrix file map to samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SampleAxis {
    /// Each column is one observation vector.
    Columns,
    /// Each row is one observation vector.
    Rows,
}

/// A command with its fully resolved configuration. Input paths are
/// absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    Simulate {
        config: SimulateConfig,
    },
    Separate {
        data: PathBuf,
        config: PipelineConfig,
    },
    Evaluate {
        pipeline: PathBuf,
        data: PathBuf,
    },
    MatrixIsa {
        matrix: PathBuf,
        samples: SampleAxis,
        config: PipelineConfig,
    },
    Demo {
        config: DemoConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path, shown: PathBuf) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(CliError::io(path))?;
        Ok(Self {
            path: shown,
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Headline numbers of a run; fields a command does not produce stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout_mismatch: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_layout: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_layout: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ar_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kept: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: String,
    pub seed: u64,
    pub invocation: Invocation,
    pub inputs: Vec<FileRecord>,
    /// Relative to the output directory. Excludes this file and the timings.
    pub outputs: Vec<FileRecord>,
    pub summary: Summary,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let m: RunManifest = crate::config::load_json(path)?;
        if m.format != RUN_FORMAT {
            return Err(CliError::Config {
                path: path.to_path_buf(),
                message: format!("unsupported manifest format {:?}", m.format),
            });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub step: String,
    pub seconds: f64,
}
