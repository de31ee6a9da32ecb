//! The subcommands. Each writes into an output directory and returns a
//! manifest that can replay it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ipa_core::arfit::OrderSelection;
use ipa_core::eval::{block_permutation_index, global_transform, hinton_export, match_layouts, LayoutMatch};
use ipa_core::io::{read_matrix, write_matrix_bin, write_series_bin};
use ipa_core::pipeline::{load_pipeline, save_pipeline, separate, PipelineConfig, SeparationPipeline};
use ipa_core::synth::{draw_sources, load_dataset, save_dataset, simulate, Dataset};
use ipa_core::tsmodel::{DifferenceOrder, TimeSeries};
use serde::Serialize;

use crate::config::{validate_pipeline, DemoConfig, SimulateConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{
    FileRecord, Invocation, RunManifest, SampleAxis, Summary, Timing, MANIFEST_FILE, RUN_FORMAT, TIMINGS_FILE,
};

/// Bookkeeping for one command: files written, inputs read, step timings.
struct Run {
    out: PathBuf,
    written: Vec<PathBuf>,
    inputs: Vec<FileRecord>,
    timings: Vec<Timing>,
}

impl Run {
    fn new(out: &Path) -> CliResult<Self> {
        fs::create_dir_all(out).map_err(CliError::io(out))?;
        Ok(Self {
            out: out.to_path_buf(),
            written: Vec::new(),
            inputs: Vec::new(),
            timings: Vec::new(),
        })
    }

    /// Absolute path of an output file, recorded for the manifest.
    fn file(&mut self, rel: impl Into<PathBuf>) -> PathBuf {
        let rel = rel.into();
        let abs = self.out.join(&rel);
        self.written.push(rel);
        abs
    }

    /// Records every file a bundle writer put under `rel`.
    fn bundle(&mut self, rel: &Path) -> CliResult<()> {
        for f in list_files(&self.out.join(rel))? {
            self.written.push(rel.join(f));
        }
        Ok(())
    }

    fn input(&mut self, path: &Path) -> CliResult<()> {
        if path.is_dir() {
            for f in list_files(path)? {
                let full = path.join(&f);
                self.inputs.push(FileRecord::of(&full, full.clone())?);
            }
        } else {
            self.inputs.push(FileRecord::of(path, path.to_path_buf())?);
        }
        Ok(())
    }

    fn time<T>(&mut self, step: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let v = f();
        self.timings.push(Timing {
            step: step.into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        v
    }

    fn json(&mut self, rel: &str, value: &impl Serialize) -> CliResult<()> {
        let path = self.file(rel);
        write_json(&path, value)
    }

    fn finish(mut self, seed: u64, invocation: Invocation, summary: Summary) -> CliResult<RunManifest> {
        self.written.sort();
        self.written.dedup();
        let outputs = self
            .written
            .iter()
            .map(|rel| FileRecord::of(&self.out.join(rel), rel.clone()))
            .collect::<CliResult<Vec<_>>>()?;
        let manifest = RunManifest {
            format: RUN_FORMAT.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            invocation,
            inputs: self.inputs,
            outputs,
            summary,
        };
        write_json(&self.out.join(MANIFEST_FILE), &manifest)?;
        write_json(&self.out.join(TIMINGS_FILE), &self.timings)?;
        Ok(manifest)
    }
}

/// Regular files below `dir`, relative and sorted.
fn list_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![PathBuf::new()];
    while let Some(rel) = stack.pop() {
        let here = dir.join(&rel);
        for entry in fs::read_dir(&here).map_err(CliError::io(&here))? {
            let entry = entry.map_err(CliError::io(&here))?;
            let name = rel.join(entry.file_name());
            if entry.path().is_dir() {
                stack.push(name);
            } else {
                out.push(name);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

/// Runs `inv` into `out` and writes its manifest there.
pub fn execute(inv: &Invocation, seed: u64, out: &Path) -> CliResult<RunManifest> {
    let mut run = Run::new(out)?;
    let summary = match inv {
        Invocation::Simulate { config } => run_simulate(&mut run, config, Path::new(""))?,
        Invocation::Separate { data, config } => {
            run.input(data)?;
            let ds = load_data(data)?;
            run_separate(&mut run, &ds, config)?
        }
        Invocation::Evaluate { pipeline, data } => {
            run.input(pipeline)?;
            run.input(data)?;
            let p = load_pipeline(pipeline).map_err(CliError::core(format!("loading {}", pipeline.display())))?;
            let ds = load_data(data)?;
            run_evaluate(&mut run, &p, &ds)?
        }
        Invocation::MatrixIsa {
            matrix,
            samples,
            config,
        } => {
            run.input(matrix)?;
            run_matrix_isa(&mut run, matrix, *samples, config)?
        }
        Invocation::Demo { config } => run_demo(&mut run, config)?,
    };
    run.finish(seed, inv.clone(), summary)
}

/// Re-executes a recorded run into `out` and lists every output whose
/// bytes differ from the record.
pub fn replay(manifest: &RunManifest, out: &Path) -> CliResult<Vec<String>> {
    let fresh = execute(&manifest.invocation, manifest.seed, out)?;
    let mut diffs = Vec::new();
    for rec in &manifest.outputs {
        match fresh.outputs.iter().find(|f| f.path == rec.path) {
            Some(f) if f.sha256 == rec.sha256 => {}
            Some(_) => diffs.push(format!("{} changed", rec.path.display())),
            None => diffs.push(format!("{} missing", rec.path.display())),
        }
    }
    for f in &fresh.outputs {
        if !manifest.outputs.iter().any(|r| r.path == f.path) {
            diffs.push(format!("{} is new", f.path.display()));
        }
    }
    for (old, new) in manifest.inputs.iter().zip(&fresh.inputs) {
        if old != new {
            diffs.push(format!("input {} changed since the recorded run", old.path.display()));
        }
    }
    Ok(diffs)
}

fn load_data(dir: &Path) -> CliResult<Dataset> {
    load_dataset(dir).map_err(CliError::core(format!("loading dataset {}", dir.display())))
}

fn run_simulate(run: &mut Run, cfg: &SimulateConfig, rel: &Path) -> CliResult<Summary> {
    cfg.validate()?;
    let e = run
        .time("draw_sources", || draw_sources(&cfg.sources, cfg.source_draws()))
        .map_err(CliError::core("drawing sources"))?;
    let (x, truth) = run
        .time("simulate", || simulate(&cfg.system, &e, &cfg.sources.layout))
        .map_err(CliError::core("simulating"))?;
    let dir = run.out.join(rel);
    let m = run
        .time("save", || {
            save_dataset(&dir, &x, Some(&truth), Some(&cfg.system), Some(&cfg.sources))
        })
        .map_err(CliError::core("saving dataset"))?;
    let mut names = vec!["dataset.json".to_string(), m.observations];
    if let Some(t) = m.truth {
        names.extend([t.sources, t.mixing]);
        names.extend(t.ar);
        names.extend(t.ma);
    }
    for n in names {
        run.written.push(rel.join(n));
    }
    Ok(Summary {
        true_layout: Some(truth.layout.dims().to_vec()),
        samples: Some(x.len()),
        ..Summary::default()
    })
}

fn fitted_summary(p: &SeparationPipeline, samples: usize) -> Summary {
    Summary {
        estimated_layout: Some(p.estimated_layout.dims().to_vec()),
        ar_order: Some(p.ar.order()),
        kept: Some(p.pca.kept()),
        samples: Some(samples),
        warnings: p.warnings.clone(),
        ..Summary::default()
    }
}

fn run_separate(run: &mut Run, ds: &Dataset, cfg: &PipelineConfig) -> CliResult<Summary> {
    validate_pipeline(cfg)?;
    let (p, e_hat) = run
        .time("separate", || separate(&ds.observations, cfg))
        .map_err(CliError::core("separate"))?;
    save_outputs(run, &p, &e_hat)?;
    let mut summary = fitted_summary(&p, ds.observations.len());
    if let Some(truth) = &ds.truth {
        summary.true_layout = Some(truth.layout.dims().to_vec());
        match global_transform(&p, truth).and_then(|g| block_permutation_index(&g)) {
            Ok(r) => {
                summary.index = Some(r.index);
                summary.layout_mismatch = Some(r.layout_mismatch);
            }
            Err(e) => summary.warnings.push(format!("index not computed: {e}")),
        }
    }
    run.json("summary.json", &summary)?;
    Ok(summary)
}

fn save_outputs(run: &mut Run, p: &SeparationPipeline, e_hat: &TimeSeries) -> CliResult<()> {
    let dir = run.out.join("pipeline");
    if dir.join("pipeline.json").is_file() {
        // a previous bundle; stale matrices would end up in the manifest
        fs::remove_dir_all(&dir).map_err(CliError::io(&dir))?;
    }
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    save_pipeline(&dir, p).map_err(CliError::core("saving pipeline"))?;
    run.bundle(Path::new("pipeline"))?;
    let path = run.file("separated.bin");
    write_series_bin(&path, e_hat).map_err(CliError::core("writing separated series"))
}

#[derive(Debug, Serialize)]
struct Metrics {
    index: f64,
    layout_mismatch: bool,
    layout_match: LayoutMatch,
    estimated_layout: Vec<usize>,
    true_layout: Vec<usize>,
}

fn run_evaluate(run: &mut Run, p: &SeparationPipeline, ds: &Dataset) -> CliResult<Summary> {
    let truth = ds.truth.as_ref().ok_or_else(|| CliError::Core {
        context: "evaluate".into(),
        source: ipa_core::Error::NoGroundTruth("the dataset manifest has no truth section".into()),
    })?;
    let gt = global_transform(p, truth).map_err(CliError::core("global transform"))?;
    let report = block_permutation_index(&gt).map_err(CliError::core("block permutation index"))?;
    let metrics = Metrics {
        index: report.index,
        layout_mismatch: report.layout_mismatch,
        layout_match: match_layouts(&p.estimated_layout, &truth.layout),
        estimated_layout: p.estimated_layout.dims().to_vec(),
        true_layout: truth.layout.dims().to_vec(),
    };
    run.json("metrics.json", &metrics)?;
    let csv = run.file("hinton.csv");
    run.file("hinton.json");
    hinton_export(&gt, &csv).map_err(CliError::core("hinton export"))?;
    Ok(Summary {
        index: Some(report.index),
        layout_mismatch: Some(report.layout_mismatch),
        estimated_layout: metrics.estimated_layout.clone().into(),
        true_layout: metrics.true_layout.clone().into(),
        ..Summary::default()
    })
}

/// Forces the i.i.d. path: no differencing, no AR filtering.
pub fn iid_config(cfg: &PipelineConfig) -> PipelineConfig {
    PipelineConfig {
        r: DifferenceOrder(0),
        max_ar_order: 0,
        selection: OrderSelection::Fixed(0),
        ..*cfg
    }
}

#[derive(Debug, Serialize)]
struct Groups {
    layout: Vec<usize>,
    /// ICA coordinates of each cluster.
    groups: Vec<Vec<usize>>,
    /// File with the back-projected columns of each cluster, in order.
    components: Vec<String>,
}

fn run_matrix_isa(run: &mut Run, matrix: &Path, axis: SampleAxis, cfg: &PipelineConfig) -> CliResult<Summary> {
    let cfg = &iid_config(cfg);
    validate_pipeline(cfg)?;
    let m = read_matrix(matrix).map_err(CliError::core(format!("reading {}", matrix.display())))?;
    let m = match axis {
        SampleAxis::Columns => m.transpose(),
        SampleAxis::Rows => m,
    };
    let x = TimeSeries::new(m).map_err(CliError::core("matrix"))?;
    let (p, e_hat) = run
        .time("separate", || separate(&x, cfg))
        .map_err(CliError::core("matrix-isa"))?;
    save_outputs(run, &p, &e_hat)?;
    // column j is the input-space image of ICA coordinate j
    let images = p.pca.dewhitening() * p.ica.rotation.transpose();
    let groups = p.partition.groups();
    let mut files = Vec::new();
    fs::create_dir_all(run.out.join("components")).map_err(CliError::io(run.out.join("components")))?;
    for (k, g) in groups.iter().enumerate() {
        let name = format!("components/cluster_{k}.bin");
        let cols = nalgebra::DMatrix::from_fn(images.nrows(), g.len(), |r, c| images[(r, g[c])]);
        let path = run.file(&name);
        write_matrix_bin(&path, &cols).map_err(CliError::core("writing components"))?;
        files.push(name);
    }
    run.json(
        "groups.json",
        &Groups {
            layout: p.estimated_layout.dims().to_vec(),
            groups,
            components: files,
        },
    )?;
    let summary = fitted_summary(&p, x.len());
    run.json("summary.json", &summary)?;
    Ok(summary)
}

fn run_demo(run: &mut Run, cfg: &DemoConfig) -> CliResult<Summary> {
    validate_pipeline(&cfg.pipeline)?;
    run_simulate(run, &cfg.simulate, Path::new("dataset"))?;
    let ds = load_data(&run.out.join("dataset"))?;
    let mut summary = run_separate(run, &ds, &cfg.pipeline)?;
    let p = load_pipeline(&run.out.join("pipeline")).map_err(CliError::core("reloading pipeline"))?;
    let eval = run_evaluate(run, &p, &ds)?;
    summary.index = eval.index;
    summary.layout_mismatch = eval.layout_mismatch;
    Ok(summary)
}
