use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsmodel::{symmetrize, TimeSeries};

/// How many principal directions to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimRule {
    Fixed(usize),
    /// Largest ratio between consecutive eigenvalues.
    EigenGap,
    /// Smallest `k` whose eigenvalues carry at least this share of the total.
    Energy(f64),
}

/// Eigenvalues below this fraction of the largest are numerical zero.
const EIGEN_FLOOR: f64 = 1e-12;
/// An eigen gap ratio below this is too weak to trust.
const MIN_GAP_RATIO: f64 = 2.0;
const FALLBACK_ENERGY: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaStage {
    pub mean: DVector<f64>,
    /// `kept x D` whitening matrix.
    pub basis: DMatrix<f64>,
    /// Descending eigenvalues of the input covariance.
    pub eigvals: Vec<f64>,
    /// Set when the eigen gap was ambiguous and the energy rule was used.
    pub fallback: bool,
}

impl PcaStage {
    pub fn kept(&self) -> usize {
        self.basis.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn transform(&self, u: &TimeSeries) -> Result<TimeSeries> {
        u.centered_by(&self.mean)?.transform(&self.basis)
    }

    /// Pseudoinverse of the whitening matrix, `D x kept`.
    pub fn dewhitening(&self) -> DMatrix<f64> {
        self.basis.clone().pseudo_inverse(1e-12).expect("non-negative epsilon")
    }
}

fn eigen_gap_choice(eigvals: &[f64]) -> Option<(usize, f64)> {
    let floor = eigvals[0] * EIGEN_FLOOR;
    let mut best: Option<(usize, f64)> = None;
    for k in 1..eigvals.len() {
        if eigvals[k - 1] <= floor {
            break;
        }
        let ratio = eigvals[k - 1] / eigvals[k].max(floor);
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((k, ratio));
        }
    }
    best
}

fn energy_choice(eigvals: &[f64], tau: f64) -> usize {
    let total: f64 = eigvals.iter().map(|l| l.max(0.0)).sum();
    let mut acc = 0.0;
    for (k, l) in eigvals.iter().enumerate() {
        acc += l.max(0.0);
        if acc >= tau * total {
            return k + 1;
        }
    }
    eigvals.len()
}

/// Eigen-decomposition of the sample covariance, through the `T x T` Gram
/// matrix when there are more coordinates than samples.
fn principal_axes(c: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (t, d) = c.shape();
    let n = t as f64;
    let (vals, vecs) = if d <= t {
        let mut cov = c.tr_mul(c) / n;
        symmetrize(&mut cov);
        let eig = cov.symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    } else {
        let mut gram = c * c.transpose() / n;
        symmetrize(&mut gram);
        let eig = gram.symmetric_eigen();
        let mut vecs = c.tr_mul(&eig.eigenvectors);
        for (k, mut col) in vecs.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm > 0.0 && eig.eigenvalues[k] > 0.0 {
                col /= norm;
            }
        }
        (eig.eigenvalues, vecs)
    };
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = vecs.select_columns(&order);
    (sorted_vals, sorted_vecs)
}

/// Centers and whitens `u`, projecting onto the leading `k` principal
/// directions chosen by `rule`.
pub fn pca_whiten(u: &TimeSeries, rule: DimRule) -> Result<(PcaStage, TimeSeries)> {
    let mean = u.mean();
    let c = u.centered_by(&mean)?.into_inner();
    let (eigvals, vecs) = principal_axes(&c);
    let max_k = eigvals.len();
    let top = eigvals[0];
    if top <= 0.0 {
        return Err(Error::Conditioning {
            index: 0,
            eigenvalue: top,
        });
    }
    let mut fallback = false;
    let kept = match rule {
        DimRule::Fixed(k) => {
            if k == 0 || k > max_k {
                return Err(Error::InvalidArgument(format!(
                    "cannot keep {k} of {max_k} principal directions"
                )));
            }
            k
        }
        DimRule::Energy(tau) => {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::InvalidArgument(format!("energy share {tau} outside (0, 1]")));
            }
            energy_choice(&eigvals, tau)
        }
        DimRule::EigenGap => match eigen_gap_choice(&eigvals) {
            Some((k, ratio)) if ratio >= MIN_GAP_RATIO => k,
            other => {
                log::warn!(
                    "eigen gap ambiguous (best ratio {:.3}); keeping {:.0}% of the energy",
                    other.map_or(1.0, |(_, r)| r),
                    FALLBACK_ENERGY * 100.0
                );
                fallback = true;
                energy_choice(&eigvals, FALLBACK_ENERGY)
            }
        },
    };
    if let Some((i, &l)) = eigvals[..kept]
        .iter()
        .enumerate()
        .find(|(_, &l)| l <= top * EIGEN_FLOOR)
    {
        return Err(Error::Conditioning {
            index: i,
            eigenvalue: l,
        });
    }
    let mut basis = vecs.columns(0, kept).transpose();
    for (k, mut row) in basis.row_iter_mut().enumerate() {
        row /= eigvals[k].sqrt();
    }
    let stage = PcaStage {
        mean,
        basis,
        eigvals,
        fallback,
    };
    let out = TimeSeries::new(c * stage.basis.transpose())?;
    Ok((stage, out))
}
