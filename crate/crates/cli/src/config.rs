//! Command configurations, built-in presets and JSON loading.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use ipa_core::isa::{DimRule, KRule};
use ipa_core::pipeline::PipelineConfig;
use ipa_core::seeding::derive_seed;
use ipa_core::synth::{burn_in, Mixing, SourceFamily, SourceSpec, SystemSpec};
use ipa_core::tsmodel::{ComponentLayout, DifferenceOrder};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Three 2D letters, ARIMA(1,1,2), D_x = 12, T = 20,000.
    Desk,
    /// Layout [2,2,2,2,3,3,3,4,4,5], ARIMA(2,1,6), D_x = 60, T = 30,000.
    PaperArima,
    /// Two 2D square-outline sources, no dynamics, D_x = 4, T = 10,000.
    Isa,
}

/// What `simulate` draws. `samples` is the observation length `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemSpec,
    pub sources: SourceSpec,
    pub samples: usize,
}

impl SimulateConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.system.validate().map_err(CliError::core("system"))?;
        self.sources.validate().map_err(CliError::core("sources"))?;
        if self.sources.layout.total() != self.system.de {
            return Err(CliError::Invalid(format!(
                "sources layout totals {} but system.de is {}",
                self.sources.layout.total(),
                self.system.de
            )));
        }
        if self.samples < 2 {
            return Err(CliError::Invalid("samples must be at least 2".into()));
        }
        Ok(())
    }

    /// Source draws needed for `samples` observations.
    pub fn source_draws(&self) -> usize {
        self.samples + burn_in(self.system.p) - self.system.r.get()
    }

    /// Replaces the embedded seeds with sub-streams of `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.system.seed = derive_seed(seed, "system");
        self.sources.seed = derive_seed(seed, "sources");
    }
}

/// `demo` runs simulate, separate and evaluate with these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

impl Preset {
    pub fn simulate(self) -> SimulateConfig {
        let (system, sources, samples) = match self {
            Preset::Desk => (
                SystemSpec::desk(0),
                SourceSpec::letters(&['A', 'K', 'M'], 0).expect("valid letters"),
                20_000,
            ),
            Preset::PaperArima => (SystemSpec::paper(0), SourceSpec::paper(0), 30_000),
            Preset::Isa => {
                let layout = ComponentLayout::new(vec![2, 2]).expect("valid");
                let system = SystemSpec {
                    p: 0,
                    q: 0,
                    r: DifferenceOrder(0),
                    dx: 4,
                    ds: 4,
                    de: 4,
                    mixing: Mixing::RandomOrthogonal,
                    seed: 0,
                };
                let sources = SourceSpec::new(layout, vec![SourceFamily::HypercubeShell; 2], 0).expect("valid");
                (system, sources, 10_000)
            }
        };
        SimulateConfig {
            system,
            sources,
            samples,
        }
    }

    pub fn pipeline(self) -> PipelineConfig {
        let base = PipelineConfig::default();
        match self {
            Preset::Desk => PipelineConfig {
                k_rule: KRule::Eigengap(6),
                ..base
            },
            Preset::PaperArima => PipelineConfig {
                k_rule: KRule::Eigengap(16),
                ..base
            },
            Preset::Isa => PipelineConfig {
                r: DifferenceOrder(0),
                dim_rule: DimRule::Fixed(4),
                k_rule: KRule::Eigengap(4),
                ..base
            },
        }
    }

    pub fn demo(self) -> DemoConfig {
        DemoConfig {
            simulate: self.simulate(),
            pipeline: self.pipeline(),
        }
    }
}

/// Parses a JSON config, reporting the path of the offending field.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: if e.path().iter().next().is_some() {
            format!("at `{}`: {}", e.path(), e.inner())
        } else {
            e.inner().to_string()
        },
    })
}

pub fn validate_pipeline(cfg: &PipelineConfig) -> CliResult<()> {
    cfg.validate().map_err(CliError::core("pipeline"))
}
