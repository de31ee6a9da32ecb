//! The full separation cascade: difference, AR prediction residual, PCA,
//! ICA, dependence graph, clustering and the final coordinate permutation.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arfit::{self, fit_ar, innovation, ArFit, ArFitManifest, OrderSelection};
use crate::error::{Error, Result};
use crate::io;
use crate::isa::{
    ica, ncut_cluster, pairwise_dependence, pca_whiten, DimRule, Estimator, IcaOptions, IcaStage, KRule, NcutOptions,
    Partition, PcaStage, SimilarityGraph,
};
use crate::seeding::derive_seed;
use crate::tsmodel::{difference, ComponentLayout, DifferenceOrder, TimeSeries};

pub const PIPELINE_FORMAT: &str = "ipa-pipeline/1";

/// AR spectral radius above which the fit is reported as near a unit root.
pub const UNIT_ROOT_WARNING: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub r: DifferenceOrder,
    pub max_ar_order: usize,
    pub selection: OrderSelection,
    pub dim_rule: DimRule,
    pub estimator: Estimator,
    pub k_rule: KRule,
    pub ica_max_sweeps: usize,
    pub ica_tol: f64,
    pub ica_restarts: usize,
    pub ncut_restarts: usize,
    pub seed: u64,
    /// Keep every intermediate series in the fitted pipeline.
    pub keep_intermediates: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let ica = IcaOptions::default();
        Self {
            r: DifferenceOrder(1),
            max_ar_order: 12,
            selection: OrderSelection::Bic,
            dim_rule: DimRule::EigenGap,
            estimator: Estimator::default(),
            k_rule: KRule::Eigengap(16),
            ica_max_sweeps: ica.max_sweeps,
            ica_tol: ica.tol,
            ica_restarts: ica.restarts,
            ncut_restarts: NcutOptions::default().restarts,
            seed: 0,
            keep_intermediates: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if let OrderSelection::Fixed(k) = self.selection {
            if k > self.max_ar_order {
                return bad(format!("fixed AR order {k} exceeds max_ar_order {}", self.max_ar_order));
            }
        }
        match self.dim_rule {
            DimRule::Fixed(0) => return bad("dim_rule fixed(0)".into()),
            DimRule::Energy(t) if !(t > 0.0 && t <= 1.0) => return bad(format!("energy share {t} outside (0, 1]")),
            _ => {}
        }
        if let Estimator::Kcca {
            sigma,
            kappa,
            eta,
            max_points,
        } = self.estimator
        {
            if sigma.is_some_and(|s| !(s > 0.0)) || !(kappa > 0.0) || !(eta > 0.0) || max_points < 2 {
                return bad(format!("invalid kcca hyperparameters {:?}", self.estimator));
            }
        }
        match self.k_rule {
            KRule::Fixed(0) | KRule::Eigengap(0) => return bad("cluster count bound 0".into()),
            _ => {}
        }
        if self.ica_max_sweeps == 0 || !(self.ica_tol > 0.0) || self.ica_restarts == 0 || self.ncut_restarts == 0 {
            return bad("ica_max_sweeps, ica_tol, ica_restarts and ncut_restarts must be positive".into());
        }
        Ok(())
    }

    pub fn seeds(&self) -> StageSeeds {
        StageSeeds {
            master: self.seed,
            ica: derive_seed(self.seed, "ica"),
            dependence: derive_seed(self.seed, "kcca"),
            ncut: derive_seed(self.seed, "ncut"),
        }
    }
}

/// Sub-seeds handed to the randomized stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub master: u64,
    pub ica: u64,
    pub dependence: u64,
    pub ncut: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates {
    pub differenced: TimeSeries,
    pub innovation: TimeSeries,
    pub whitened: TimeSeries,
    pub ica_output: TimeSeries,
}

/// A fitted cascade. Immutable once built.
#[derive(Debug, Clone)]
pub struct SeparationPipeline {
    pub config: PipelineConfig,
    pub seeds: StageSeeds,
    pub r: DifferenceOrder,
    pub ar: ArFit,
    pub pca: PcaStage,
    pub ica: IcaStage,
    pub graph: SimilarityGraph,
    pub partition: Partition,
    pub laplacian_spectrum: Vec<f64>,
    pub estimated_layout: ComponentLayout,
    pub warnings: Vec<String>,
    pub intermediates: Option<Intermediates>,
}

impl SeparationPipeline {
    pub fn input_dim(&self) -> usize {
        self.ar.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.pca.kept()
    }

    /// Instantaneous part `P W_ICA W_PCA`, `kept x D_x`.
    pub fn demixing_matrix(&self) -> DMatrix<f64> {
        self.partition.permutation_matrix() * &self.ica.rotation * &self.pca.basis
    }

    /// Runs the fitted operator on new observations without refitting.
    /// The output starts `r + order` samples after the input.
    pub fn apply(&self, x: &TimeSeries) -> Result<TimeSeries> {
        if x.dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "pipeline expects dim {}, got {}",
                self.input_dim(),
                x.dim()
            )));
        }
        let u = difference(x, self.r)?;
        let v = innovation(&u, &self.ar)?;
        let w = self.pca.transform(&v)?;
        let y = self.ica.transform(&w)?;
        y.select_columns(&self.partition.order())
    }
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

/// Fits the cascade on `x` and returns it with the separated series.
pub fn separate(x: &TimeSeries, cfg: &PipelineConfig) -> Result<(SeparationPipeline, TimeSeries)> {
    staged("config", cfg.validate())?;
    let seeds = cfg.seeds();
    let u = staged("difference", difference(x, cfg.r))?;
    let ar = staged("fit_ar", fit_ar(&u, cfg.max_ar_order, cfg.selection))?;
    let mut warnings = Vec::new();
    let radius = ar.excited_radius;
    if radius > UNIT_ROOT_WARNING {
        let msg = format!(
            "AR fit has companion spectral radius {radius:.4} > {UNIT_ROOT_WARNING}: near unit root, consider a larger difference order"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let v = staged("innovation", innovation(&u, &ar))?;
    let (pca, w) = staged("pca_whiten", pca_whiten(&v, cfg.dim_rule))?;
    if pca.fallback {
        warnings.push(format!(
            "eigen gap ambiguous; energy rule kept {} of {} directions",
            pca.kept(),
            pca.input_dim()
        ));
    }
    let ica_opts = IcaOptions {
        max_sweeps: cfg.ica_max_sweeps,
        tol: cfg.ica_tol,
        restarts: cfg.ica_restarts,
        seed: seeds.ica,
    };
    let (ica_stage, y) = staged("ica", ica(&w, &ica_opts))?;
    let (graph, clustering) = if y.dim() == 1 {
        let graph = SimilarityGraph::new(DMatrix::zeros(1, 1))?;
        let clustering = crate::isa::Clustering {
            partition: Partition::from_labels(&[0])?,
            laplacian_spectrum: vec![0.0],
            candidates: vec![1],
        };
        (graph, clustering)
    } else {
        let graph = staged(
            "pairwise_dependence",
            pairwise_dependence(&y, &cfg.estimator, seeds.dependence),
        )?;
        let k_rule = match cfg.k_rule {
            KRule::Fixed(m) => KRule::Fixed(m),
            KRule::Eigengap(m) => KRule::Eigengap(m.min(y.dim())),
        };
        let opts = NcutOptions {
            restarts: cfg.ncut_restarts,
            seed: seeds.ncut,
            ..NcutOptions::default()
        };
        let clustering = staged("ncut_cluster", ncut_cluster(&graph, k_rule, &opts))?;
        (graph, clustering)
    };
    let partition = clustering.partition;
    let e_hat = y.select_columns(&partition.order())?;
    let intermediates = cfg.keep_intermediates.then_some(Intermediates {
        differenced: u,
        innovation: v,
        whitened: w,
        ica_output: y,
    });
    let pipeline = SeparationPipeline {
        config: *cfg,
        seeds,
        r: cfg.r,
        ar,
        pca,
        ica: ica_stage,
        graph,
        estimated_layout: partition.layout(),
        partition,
        laplacian_spectrum: clustering.laplacian_spectrum,
        warnings,
        intermediates,
    };
    Ok((pipeline, e_hat))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PcaRecord {
    mean: String,
    basis: String,
    eigvals: Vec<f64>,
    fallback: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IcaRecord {
    rotation: String,
    convergence: Vec<f64>,
}

/// Partition as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub assignment: Vec<usize>,
    pub layout: ComponentLayout,
    /// Input coordinate at each output position.
    pub permutation: Vec<usize>,
}

impl From<&Partition> for PartitionRecord {
    fn from(p: &Partition) -> Self {
        Self {
            assignment: p.assignment().to_vec(),
            layout: p.layout(),
            permutation: p.order(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PipelineManifest {
    format: String,
    config: PipelineConfig,
    seeds: StageSeeds,
    r: DifferenceOrder,
    ar: ArFitManifest,
    pca: PcaRecord,
    ica: IcaRecord,
    graph: String,
    partition: PartitionRecord,
    laplacian_spectrum: Vec<f64>,
    warnings: Vec<String>,
}

fn row_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v.as_slice())
}

/// Writes the fitted stages into `dir` as `pipeline.json` plus binary
/// matrices. Intermediate series are not saved.
pub fn save_pipeline(dir: &Path, p: &SeparationPipeline) -> Result<()> {
    fs::create_dir_all(dir)?;
    let ar = arfit::save_ar_fit(dir, "ar", &p.ar)?;
    io::write_matrix_bin(dir.join("pca_mean.bin"), &row_matrix(&p.pca.mean))?;
    io::write_matrix_bin(dir.join("pca_basis.bin"), &p.pca.basis)?;
    io::write_matrix_bin(dir.join("ica_rotation.bin"), &p.ica.rotation)?;
    io::write_matrix_bin(dir.join("graph.bin"), p.graph.weights())?;
    let manifest = PipelineManifest {
        format: PIPELINE_FORMAT.into(),
        config: p.config,
        seeds: p.seeds,
        r: p.r,
        ar,
        pca: PcaRecord {
            mean: "pca_mean.bin".into(),
            basis: "pca_basis.bin".into(),
            eigvals: p.pca.eigvals.clone(),
            fallback: p.pca.fallback,
        },
        ica: IcaRecord {
            rotation: "ica_rotation.bin".into(),
            convergence: p.ica.convergence.clone(),
        },
        graph: "graph.bin".into(),
        partition: (&p.partition).into(),
        laplacian_spectrum: p.laplacian_spectrum.clone(),
        warnings: p.warnings.clone(),
    };
    fs::write(dir.join("pipeline.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_pipeline(dir: &Path) -> Result<SeparationPipeline> {
    let text = fs::read_to_string(dir.join("pipeline.json"))?;
    let m: PipelineManifest = serde_json::from_str(&text)?;
    if m.format != PIPELINE_FORMAT {
        return Err(Error::Format(format!(
            "pipeline format {:?}, expected {PIPELINE_FORMAT:?}",
            m.format
        )));
    }
    let ar = arfit::load_ar_fit(dir, &m.ar)?;
    let mean = io::read_matrix(dir.join(&m.pca.mean))?;
    let basis = io::read_matrix(dir.join(&m.pca.basis))?;
    let rotation = io::read_matrix(dir.join(&m.ica.rotation))?;
    let graph = SimilarityGraph::new(io::read_matrix(dir.join(&m.graph))?)?;
    let partition = Partition::from_labels(&m.partition.assignment)?;
    if PartitionRecord::from(&partition) != m.partition {
        return Err(Error::Format("partition record is inconsistent".into()));
    }
    let kept = basis.nrows();
    if mean.len() != basis.ncols()
        || basis.ncols() != ar.dim()
        || rotation.shape() != (kept, kept)
        || partition.len() != kept
        || graph.len() != kept
    {
        return Err(Error::Format("pipeline stage shapes do not chain".into()));
    }
    Ok(SeparationPipeline {
        config: m.config,
        seeds: m.seeds,
        r: m.r,
        ar,
        pca: PcaStage {
            mean: DVector::from_column_slice(mean.as_slice()),
            basis,
            eigvals: m.pca.eigvals,
            fallback: m.pca.fallback,
        },
        ica: IcaStage {
            rotation,
            convergence: m.ica.convergence,
        },
        graph,
        estimated_layout: partition.layout(),
        partition,
        laplacian_spectrum: m.laplacian_spectrum,
        warnings: m.warnings,
        intermediates: None,
    })
}
