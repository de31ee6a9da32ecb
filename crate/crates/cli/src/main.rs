use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use ipa_cli::config::{load_json, DemoConfig, Preset, SimulateConfig};
use ipa_cli::{exit, iid_config, CliError, CliResult, Invocation, RunManifest, SampleAxis};
use ipa_core::pipeline::PipelineConfig;

/// Recover independent multidimensional hidden processes from linear
/// mixtures.
///
/// Exit codes: 0 ok, 1 replay mismatch, 2 config, 3 data, 4 numerical,
/// 5 I/O.
#[derive(Debug, Parser)]
#[command(name = "ipa", version)]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "ipa-out")]
    out: PathBuf,
    /// JSON config replacing the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic dataset bundle (default preset: desk).
    Simulate {
        /// Override the number of observations.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Fit the separation cascade to a dataset bundle.
    Separate {
        /// Dataset directory written by `simulate`.
        data: PathBuf,
    },
    /// Score a fitted pipeline against a dataset's ground truth.
    Evaluate { pipeline: PathBuf, data: PathBuf },
    /// i.i.d. subspace analysis of a plain matrix file (binary or CSV).
    MatrixIsa {
        matrix: PathBuf,
        /// Whether observation vectors are the matrix columns or rows.
        #[arg(long, value_enum, default_value = "columns")]
        samples: SampleAxis,
    },
    /// simulate, separate and evaluate in one go (default preset: desk).
    Demo {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Re-run a command from its manifest.json.
    Replay {
        manifest: PathBuf,
        /// Compare the new outputs with the recorded hashes.
        #[arg(long)]
        check: bool,
    },
}

fn absolute(p: &Path) -> CliResult<PathBuf> {
    std::path::absolute(p).map_err(CliError::io(p))
}

fn pipeline_config(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), _) => load_json(path)?,
        (None, Some(p)) => p.pipeline(),
        (None, None) => PipelineConfig::default(),
    };
    cfg.seed = cli.seed;
    Ok(cfg)
}

fn invocation(cli: &Cli) -> CliResult<Invocation> {
    let preset = cli.preset.unwrap_or(Preset::Desk);
    Ok(match &cli.command {
        Command::Simulate { samples } => {
            let mut config: SimulateConfig = match &cli.config {
                Some(path) => load_json(path)?,
                None => preset.simulate(),
            };
            if let Some(t) = samples {
                config.samples = *t;
            }
            config.reseed(cli.seed);
            Invocation::Simulate { config }
        }
        Command::Separate { data } => Invocation::Separate {
            data: absolute(data)?,
            config: pipeline_config(cli)?,
        },
        Command::Evaluate { pipeline, data } => Invocation::Evaluate {
            pipeline: absolute(pipeline)?,
            data: absolute(data)?,
        },
        Command::MatrixIsa { matrix, samples } => Invocation::MatrixIsa {
            matrix: absolute(matrix)?,
            samples: *samples,
            config: iid_config(&pipeline_config(cli)?),
        },
        Command::Demo { samples } => {
            let mut config: DemoConfig = match &cli.config {
                Some(path) => load_json(path)?,
                None => preset.demo(),
            };
            if let Some(t) = samples {
                config.simulate.samples = *t;
            }
            config.simulate.reseed(cli.seed);
            config.pipeline.seed = cli.seed;
            Invocation::Demo { config }
        }
        Command::Replay { .. } => unreachable!("handled separately"),
    })
}

/// Ignores a closed stdout so `ipa ... | head` does not panic.
fn print_json(v: &impl serde::Serialize) {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--threads {n}: {e}")))?;
    }
    if let Command::Replay { manifest, check } = &cli.command {
        let recorded = RunManifest::load(manifest)?;
        let diffs = ipa_cli::replay(&recorded, &cli.out)?;
        if *check && !diffs.is_empty() {
            return Err(CliError::ReplayMismatch(diffs));
        }
        print_json(&recorded.summary);
        return Ok(());
    }
    let inv = invocation(cli)?;
    let manifest = ipa_cli::execute(&inv, cli.seed, &cli.out)?;
    print_json(&manifest.summary);
    for w in &manifest.summary.warnings {
        log::warn!("{w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("  hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
