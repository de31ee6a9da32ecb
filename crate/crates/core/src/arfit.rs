//! Least-squares identification of a vector AR model and extraction of its
//! innovation.
//!
//! For the undercomplete ARMA observation model the innovation of the AR
//! fit is `A Q_0 e(t)`, a plain linear mixture of the hidden sources, so
//! fitting and filtering here turns the temporal problem into an i.i.d. one.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::io;
use crate::tsmodel::{apply_polynomial, companion_matrix, symmetrize, ArCoeffs, Boundary, TimeSeries};

/// Regressor condition numbers above this are rejected.
pub const MAX_CONDITION: f64 = 1e10;

/// Eigenvalues of the residual covariance are floored at this fraction of
/// the largest one before taking the log-determinant.
const LOGDET_FLOOR: f64 = 1e-12;

/// Regressor directions whose variance is below this fraction of the
/// largest are ignored when judging stability of the fit.
const EXCITATION_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderSelection {
    Fixed(usize),
    Bic,
    Aic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionScore {
    pub order: usize,
    /// `None` when the residual covariance is not finite.
    pub score: Option<f64>,
    pub condition: f64,
    /// Numerical rank of the lagged regressor.
    pub rank: usize,
}

/// Fitted prediction model `u(t) ~ sum_i A_i u(t-i)` around `mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArFit {
    pub coeffs: ArCoeffs,
    pub noise_cov: DMatrix<f64>,
    pub criterion_trace: Vec<CriterionScore>,
    pub mean: DVector<f64>,
    /// Companion spectral radius restricted to the state directions the
    /// data actually excites. A singular process admits exact linear
    /// relations among its lags, and the modes living there are arbitrary.
    pub excited_radius: f64,
}

impl ArFit {
    /// A fit with the given lags and mean; noise covariance is left at zero.
    pub fn from_parts(coeffs: ArCoeffs, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != coeffs.dim() {
            return Err(shape("mean and coefficient dimensions differ"));
        }
        let d = coeffs.dim();
        Ok(Self {
            excited_radius: coeffs.spectral_radius(),
            coeffs,
            noise_cov: DMatrix::zeros(d, d),
            criterion_trace: Vec::new(),
            mean,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.order()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }
}

/// Upper-triangular factor of the stacked design, computed chunk by chunk
/// (TSQR) so the full regressor never has to be materialized.
struct LaggedQr {
    r: DMatrix<f64>,
    rows: usize,
}

fn lagged_qr(x: &DMatrix<f64>, order: usize) -> LaggedQr {
    let (t, d) = x.shape();
    let cols = order * d + d;
    let rows = t - order;
    let chunk = (2 * cols).max(512);
    let mut r: Option<DMatrix<f64>> = None;
    let mut start = order;
    while start < t {
        let c = chunk.min(t - start);
        let prev = r.as_ref().map_or(0, DMatrix::nrows);
        let mut block = DMatrix::zeros(prev + c, cols);
        if let Some(rp) = &r {
            block.rows_mut(0, prev).copy_from(rp);
        }
        for lag in 1..=order {
            block
                .view_mut((prev, (lag - 1) * d), (c, d))
                .copy_from(&x.rows(start - lag, c));
        }
        block.view_mut((prev, order * d), (c, d)).copy_from(&x.rows(start, c));
        let rn = block.qr().r();
        r = Some(rn);
        start += c;
    }
    let mut r = r.expect("at least one chunk");
    if r.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.rows_mut(0, r.nrows()).copy_from(&r);
        r = padded;
    }
    LaggedQr { r, rows }
}

fn clamp_condition(sv: &DVector<f64>) -> f64 {
    let min = sv.min();
    // finite so it survives JSON
    if min <= 0.0 {
        f64::MAX
    } else {
        (sv.max() / min).min(f64::MAX)
    }
}

/// Minimum-norm least squares on the triangular factor: singular values of
/// `R11` below `max / MAX_CONDITION` are dropped. Returns the coefficients,
/// the residual cross-product `E^T E` and the retained rank.
struct Projection {
    coeffs: DMatrix<f64>,
    residual: DMatrix<f64>,
    rank: usize,
    condition: f64,
}

fn truncated_solve(r11: &DMatrix<f64>, r12: &DMatrix<f64>, r22tr22: &DMatrix<f64>) -> Projection {
    let kd = r11.nrows();
    if kd == 0 {
        return Projection {
            coeffs: DMatrix::zeros(0, r12.ncols()),
            residual: r22tr22.clone(),
            rank: 0,
            condition: 1.0,
        };
    }
    let svd = r11.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let sv = &svd.singular_values;
    let cut = sv.max() / MAX_CONDITION;
    let c = u.tr_mul(r12);
    let mut coeffs = DMatrix::zeros(kd, r12.ncols());
    let mut residual = r22tr22.clone();
    let mut rank = 0;
    for i in 0..kd {
        let ci = c.row(i);
        if sv[i] > cut {
            rank += 1;
            coeffs += vt.row(i).transpose() * (ci / sv[i]);
        } else {
            residual += ci.transpose() * ci;
        }
    }
    Projection {
        coeffs,
        residual,
        rank,
        condition: clamp_condition(sv),
    }
}

fn excited_radius(r11: &DMatrix<f64>, lags: &[DMatrix<f64>]) -> Result<f64> {
    let c = companion_matrix(lags)?;
    let svd = r11.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested");
    let sv = &svd.singular_values;
    let cut = sv.max() * EXCITATION_FLOOR.sqrt();
    let rows: Vec<_> = (0..sv.len()).filter(|&i| sv[i] > cut).map(|i| vt.row(i)).collect();
    if rows.is_empty() {
        return Ok(0.0);
    }
    let basis = DMatrix::from_rows(&rows);
    let reduced = &basis * c * basis.transpose();
    Ok(reduced
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

fn log_det_floored(cov: &DMatrix<f64>) -> f64 {
    let eig = cov.clone().symmetric_eigenvalues();
    let max = eig.max().max(f64::MIN_POSITIVE);
    let floor = max * LOGDET_FLOOR;
    eig.iter().map(|&l| l.max(floor).ln()).sum()
}

/// Ordinary least squares AR fit via QR of the block-lagged regressor.
///
/// With `Bic`/`Aic` every order in `0..=max_order` is scored on the common
/// sample `t = max_order..T` and the winner is refit on all of its available
/// rows. Orders whose regressor is rank deficient are scored with the
/// minimum-norm solution and charged for `rank * D` parameters; an
/// explicitly requested `Fixed` order must be well conditioned.
pub fn fit_ar(u: &TimeSeries, max_order: usize, selection: OrderSelection) -> Result<ArFit> {
    let d = u.dim();
    let horizon = match selection {
        OrderSelection::Fixed(p) => p,
        _ => max_order,
    };
    // order 0 is just the sample mean and covariance
    let needed = if horizon == 0 { 1 } else { horizon * d + d };
    if u.len() <= needed {
        return Err(Error::InsufficientLength { needed, got: u.len() });
    }
    let mean = u.mean();
    let x = u.centered_by(&mean)?.into_inner();

    let (order, trace) = match selection {
        OrderSelection::Fixed(p) => (p, Vec::new()),
        OrderSelection::Bic | OrderSelection::Aic => {
            let qr = lagged_qr(&x, horizon);
            let n = qr.rows as f64;
            let kd = horizon * d;
            let rxy = qr.r.view((0, kd), (kd, d)).into_owned();
            let ryy = qr.r.view((kd, kd), (d, d)).upper_triangle();
            let base = ryy.tr_mul(&ryy);
            let mut trace = Vec::with_capacity(horizon + 1);
            for k in 0..=horizon {
                let tail = rxy.rows(k * d, kd - k * d);
                let r22 = &base + tail.tr_mul(&tail);
                let r11 = qr.r.view((0, 0), (k * d, k * d)).into_owned();
                let proj = truncated_solve(&r11, &rxy.rows(0, k * d).into_owned(), &r22);
                let mut cov = proj.residual / n;
                symmetrize(&mut cov);
                let params = (proj.rank * d) as f64;
                let penalty = match selection {
                    OrderSelection::Bic => params * n.ln(),
                    _ => 2.0 * params,
                };
                let score = n * log_det_floored(&cov) + penalty;
                trace.push(CriterionScore {
                    order: k,
                    score: score.is_finite().then_some(score),
                    condition: proj.condition,
                    rank: proj.rank,
                });
            }
            let best = trace
                .iter()
                .filter_map(|c| c.score.map(|s| (c.order, s)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(k, _)| k)
                .ok_or(Error::IllConditioned {
                    order: 0,
                    condition: f64::INFINITY,
                })?;
            (best, trace)
        }
    };

    if order == 0 {
        let mut noise_cov = x.tr_mul(&x) / x.nrows() as f64;
        symmetrize(&mut noise_cov);
        return Ok(ArFit {
            coeffs: ArCoeffs::white(d),
            noise_cov,
            criterion_trace: trace,
            mean,
            excited_radius: 0.0,
        });
    }

    let qr = lagged_qr(&x, order);
    let kd = order * d;
    let r11 = qr.r.view((0, 0), (kd, kd)).into_owned();
    let r12 = qr.r.view((0, kd), (kd, d)).into_owned();
    let r22 = qr.r.view((kd, kd), (d, d)).upper_triangle();
    let proj = truncated_solve(&r11, &r12, &r22.tr_mul(&r22));
    if proj.rank < kd && matches!(selection, OrderSelection::Fixed(_)) {
        return Err(Error::IllConditioned {
            order,
            condition: proj.condition,
        });
    }
    if proj.rank < kd {
        log::info!(
            "AR order {order}: regressor rank {} of {kd}, minimum-norm coefficients",
            proj.rank
        );
    }
    let lags = (0..order)
        .map(|i| proj.coeffs.rows(i * d, d).transpose())
        .collect::<Vec<_>>();
    let mut noise_cov = proj.residual / qr.rows as f64;
    symmetrize(&mut noise_cov);
    Ok(ArFit {
        excited_radius: excited_radius(&r11, &lags)?,
        coeffs: ArCoeffs::new(d, lags)?,
        noise_cov,
        criterion_trace: trace,
        mean,
    })
}

/// Prediction residual `u(t) - mean - sum_i A_i (u(t-i) - mean)`; drops the
/// first `order` samples.
pub fn innovation(u: &TimeSeries, fit: &ArFit) -> Result<TimeSeries> {
    if u.dim() != fit.dim() {
        return Err(shape(format!(
            "series has dim {}, AR fit has dim {}",
            u.dim(),
            fit.dim()
        )));
    }
    if u.len() <= fit.order() {
        return Err(Error::InsufficientLength {
            needed: fit.order(),
            got: u.len(),
        });
    }
    let centered = u.centered_by(&fit.mean)?;
    apply_polynomial(&fit.coeffs.operator(), &centered, Boundary::TruncateFirstN)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArFitManifest {
    pub order: usize,
    pub dim: usize,
    pub coeffs: Vec<String>,
    pub noise_cov: String,
    pub mean: String,
    pub criterion_trace: Vec<CriterionScore>,
    pub excited_radius: f64,
}

/// Writes the fit's matrices into `dir` as `<prefix>_*.bin` and returns the
/// manifest fragment naming them.
pub fn save_ar_fit(dir: &Path, prefix: &str, fit: &ArFit) -> Result<ArFitManifest> {
    let mut coeffs = Vec::new();
    for (i, a) in fit.coeffs.lags().iter().enumerate() {
        let name = format!("{prefix}_lag{}.bin", i + 1);
        io::write_matrix_bin(dir.join(&name), a)?;
        coeffs.push(name);
    }
    let noise_cov = format!("{prefix}_noise_cov.bin");
    io::write_matrix_bin(dir.join(&noise_cov), &fit.noise_cov)?;
    let mean = format!("{prefix}_mean.bin");
    io::write_matrix_bin(
        dir.join(&mean),
        &DMatrix::from_column_slice(1, fit.dim(), fit.mean.as_slice()),
    )?;
    Ok(ArFitManifest {
        order: fit.order(),
        dim: fit.dim(),
        coeffs,
        noise_cov,
        mean,
        criterion_trace: fit.criterion_trace.clone(),
        excited_radius: fit.excited_radius,
    })
}

pub fn load_ar_fit(dir: &Path, m: &ArFitManifest) -> Result<ArFit> {
    let lags = m
        .coeffs
        .iter()
        .map(|n| io::read_matrix(dir.join(n)))
        .collect::<Result<Vec<_>>>()?;
    let mean = io::read_matrix(dir.join(&m.mean))?;
    Ok(ArFit {
        coeffs: ArCoeffs::new(m.dim, lags)?,
        noise_cov: io::read_matrix(dir.join(&m.noise_cov))?,
        criterion_trace: m.criterion_trace.clone(),
        mean: DVector::from_column_slice(mean.as_slice()),
        excited_radius: m.excited_radius,
    })
}
