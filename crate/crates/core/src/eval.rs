//! Scoring a separation against ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::SeparationPipeline;
use crate::synth::GroundTruth;
use crate::tsmodel::{ComponentLayout, TimeSeries};

/// `G = P W_ICA W_PCA A Q_0` with its estimated (row) and true (column)
/// layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTransform {
    pub g: DMatrix<f64>,
    pub row_layout: ComponentLayout,
    pub col_layout: ComponentLayout,
}

impl GlobalTransform {
    pub fn new(g: DMatrix<f64>, row_layout: ComponentLayout, col_layout: ComponentLayout) -> Result<Self> {
        if !g.is_square() || row_layout.total() != g.nrows() || col_layout.total() != g.ncols() {
            return Err(Error::Shape(format!(
                "G is {}x{}, layouts total {} and {}",
                g.nrows(),
                g.ncols(),
                row_layout.total(),
                col_layout.total()
            )));
        }
        Ok(Self {
            g,
            row_layout,
            col_layout,
        })
    }
}

pub fn global_transform(p: &SeparationPipeline, truth: &GroundTruth) -> Result<GlobalTransform> {
    let aq = truth.system.innovation_mixing();
    let de = truth.layout.total();
    if p.output_dim() != de {
        return Err(Error::Shape(format!(
            "pipeline keeps {} dimensions but the sources have {de}; rerun with dim_rule fixed({de})",
            p.output_dim()
        )));
    }
    if p.input_dim() != aq.nrows() {
        return Err(Error::Shape(format!(
            "pipeline input dim {} does not match the mixing's {} rows",
            p.input_dim(),
            aq.nrows()
        )));
    }
    GlobalTransform::new(
        p.demixing_matrix() * aq,
        p.estimated_layout.clone(),
        truth.layout.clone(),
    )
}

/// Frobenius norm of every (row block, column block) of `g`, which is
/// unchanged by orthogonal transforms inside a block.
pub fn block_norms(g: &DMatrix<f64>, rows: &ComponentLayout, cols: &ComponentLayout) -> DMatrix<f64> {
    let ro = rows.offsets();
    let co = cols.offsets();
    DMatrix::from_fn(rows.components(), cols.components(), |m, n| {
        g.view((ro[m], co[n]), (ro[m + 1] - ro[m], co[n + 1] - co[n])).norm()
    })
}

/// Amari-style distance of a non-negative square matrix from a scaled
/// permutation, normalized to `[0, 1]`. A `1 x 1` matrix scores 0.
pub fn amari_index(b: &DMatrix<f64>) -> Result<f64> {
    let m = b.nrows();
    if !b.is_square() || m == 0 {
        return Err(Error::Shape(format!("block matrix is {}x{}", b.nrows(), b.ncols())));
    }
    for i in 0..m {
        if b.row(i).max() <= 0.0 {
            return Err(Error::DegenerateBlock { axis: "row", index: i });
        }
        if b.column(i).max() <= 0.0 {
            return Err(Error::DegenerateBlock {
                axis: "column",
                index: i,
            });
        }
    }
    if m == 1 {
        return Ok(0.0);
    }
    let rows: f64 = b.row_iter().map(|r| r.sum() / r.max() - 1.0).sum();
    let cols: f64 = b.column_iter().map(|c| c.sum() / c.max() - 1.0).sum();
    Ok((rows + cols) / (2.0 * m as f64 * (m as f64 - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub index: f64,
    /// Set when the layouts differ as multisets; the index is then 1.
    pub layout_mismatch: bool,
}

pub fn block_permutation_index(gt: &GlobalTransform) -> Result<IndexReport> {
    if gt.row_layout.sorted_dims() != gt.col_layout.sorted_dims() {
        return Ok(IndexReport {
            index: 1.0,
            layout_mismatch: true,
        });
    }
    let b = block_norms(&gt.g, &gt.row_layout, &gt.col_layout);
    Ok(IndexReport {
        index: amari_index(&b)?,
        layout_mismatch: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HintonSidecar {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
}

/// Writes `|G|` as a headerless CSV at `path` and the block offsets to the
/// same path with a `.json` extension.
pub fn hinton_export(gt: &GlobalTransform, path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty output path",
        )));
    }
    io::write_matrix_csv(path, &gt.g.abs())?;
    let sidecar = HintonSidecar {
        rows: gt.g.nrows(),
        cols: gt.g.ncols(),
        row_offsets: gt.row_layout.offsets(),
        col_offsets: gt.col_layout.offsets(),
    };
    fs::write(path.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum LayoutMatch {
    Exact,
    Permuted,
    /// Count of each dimension in the estimate minus its count in the truth,
    /// non-zero entries only.
    Mismatch {
        difference: BTreeMap<usize, i64>,
    },
}

pub fn match_layouts(est: &ComponentLayout, truth: &ComponentLayout) -> LayoutMatch {
    if est.dims() == truth.dims() {
        return LayoutMatch::Exact;
    }
    let mut diff: BTreeMap<usize, i64> = BTreeMap::new();
    for d in est.dims() {
        *diff.entry(*d).or_default() += 1;
    }
    for d in truth.dims() {
        *diff.entry(*d).or_default() -= 1;
    }
    diff.retain(|_, c| *c != 0);
    if diff.is_empty() {
        LayoutMatch::Permuted
    } else {
        LayoutMatch::Mismatch { difference: diff }
    }
}

/// `min_B ||y - e B^T||_F / ||y||_F` over all linear maps, both series
/// centered first.
pub fn relative_ls_residual(y: &TimeSeries, e: &TimeSeries) -> Result<f64> {
    if y.len() != e.len() {
        return Err(Error::Shape(format!("lengths {} and {} differ", y.len(), e.len())));
    }
    let yc = y.centered().into_inner();
    let ec = e.centered().into_inner();
    let coef = ec
        .clone()
        .svd(true, true)
        .solve(&yc, 1e-12)
        .map_err(|m| Error::InvalidArgument(m.into()))?;
    let resid = &yc - &ec * coef;
    Ok(resid.norm() / yc.norm())
}
