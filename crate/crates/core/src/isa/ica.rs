//! Fixed-point ICA (negentropy contrast, log-cosh nonlinearity, symmetric
//! decorrelation) on whitened data.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;
use crate::tsmodel::{symmetrize, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaOptions {
    pub max_sweeps: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for IcaOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            tol: 1e-6,
            restarts: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaStage {
    /// Orthogonal demixing rotation.
    pub rotation: DMatrix<f64>,
    /// `max_i |1 - |<w_i^new, w_i^old>||` per sweep, divided by the step size.
    pub convergence: Vec<f64>,
}

impl IcaStage {
    pub fn transform(&self, w: &TimeSeries) -> Result<TimeSeries> {
        w.transform(&self.rotation)
    }
}

/// Largest allowed deviation of the input covariance from identity.
pub const WHITENESS_TOL: f64 = 1e-3;

/// `(W W^T)^{-1/2} W`.
pub(crate) fn symmetric_decorrelation(w: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wwt = w * w.transpose();
    symmetrize(&mut wwt);
    let eig = wwt.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col /= eig.eigenvalues[k].max(f64::MIN_POSITIVE).sqrt();
    }
    scaled * eig.eigenvectors.transpose() * w
}

pub(crate) fn random_rotation(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeding::rng(seed, 0);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    symmetric_decorrelation(&g)
}

/// `E log cosh` of a standard normal.
const GAUSS_LOGCOSH: f64 = 0.374_567_207_491_438;

struct Descent {
    rot: DMatrix<f64>,
    log: Vec<f64>,
    converged: bool,
}

/// Stabilized fixed-point iteration from `rot`; `x` holds coordinates in
/// rows.
fn descend(x: &DMatrix<f64>, mut rot: DMatrix<f64>, opts: &IcaOptions) -> Descent {
    let d = x.nrows();
    let n = x.ncols() as f64;
    let mut log = Vec::new();
    // step size, halved whenever the change grows for several sweeps in a row
    let mut mu = 1.0;
    let mut rising = 0;
    for _ in 0..opts.max_sweeps {
        let y = &rot * x;
        let mut g = y.clone();
        let mut mean_dg = vec![0.0; d];
        for (i, mean) in mean_dg.iter_mut().enumerate() {
            let mut acc = 0.0;
            for v in g.row_mut(i).iter_mut() {
                let th = v.tanh();
                *v = th;
                acc += 1.0 - th * th;
            }
            *mean = acc / n;
        }
        // E{g(y) y^T}; its diagonal is beta
        let gy = (&g * y.transpose()) / n;
        let mut step = -gy.clone();
        for i in 0..d {
            let beta = gy[(i, i)];
            step[(i, i)] += beta;
            let denom = mean_dg[i] - beta;
            let mut row = step.row_mut(i);
            row /= if denom.abs() > 1e-12 {
                denom
            } else {
                1e-12f64.copysign(denom)
            };
        }
        let next = symmetric_decorrelation(&(&rot + mu * step * &rot));
        let change = (0..d)
            .map(|i| (1.0 - next.row(i).dot(&rot.row(i)).abs()).abs())
            .fold(0.0, f64::max);
        rot = next;
        let scaled = change / mu;
        if log.last().is_some_and(|&prev| scaled > prev) {
            rising += 1;
            if rising >= 3 && mu > 1e-3 {
                mu *= 0.5;
                rising = 0;
            }
        } else {
            rising = 0;
        }
        log.push(scaled);
        if scaled < opts.tol {
            return Descent {
                rot,
                log,
                converged: true,
            };
        }
    }
    Descent {
        rot,
        log,
        converged: false,
    }
}

/// Sum over outputs of the squared log-cosh negentropy proxy.
fn contrast(y: &DMatrix<f64>) -> f64 {
    let n = y.ncols() as f64;
    y.row_iter()
        .map(|r| (r.iter().map(|v| v.cosh().ln()).sum::<f64>() / n - GAUSS_LOGCOSH).powi(2))
        .sum()
}

fn restart_seed(seed: u64, k: usize) -> u64 {
    if k == 0 {
        seed
    } else {
        seeding::derive_seed(seed, &format!("restart-{k}"))
    }
}

/// Finds an orthogonal rotation of the white series `w` whose outputs are
/// maximally non-Gaussian. Each restart starts from its own random
/// rotation; the converged result with the largest contrast wins.
pub fn ica(w: &TimeSeries, opts: &IcaOptions) -> Result<(IcaStage, TimeSeries)> {
    let d = w.dim();
    let deviation = (w.covariance() - DMatrix::identity(d, d)).amax();
    if deviation > WHITENESS_TOL {
        return Err(Error::NotWhite { deviation });
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("ica restarts must be positive".into()));
    }
    let x = w.data().transpose();
    let run = |k: usize| {
        let r = descend(&x, random_rotation(d, restart_seed(opts.seed, k)), opts);
        let c = if r.converged {
            contrast(&(&r.rot * &x))
        } else {
            f64::NEG_INFINITY
        };
        (r, c)
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<(Descent, f64)> = {
        use rayon::prelude::*;
        (0..opts.restarts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<(Descent, f64)> = (0..opts.restarts).map(run).collect();

    let mut best: Option<(usize, f64)> = None;
    for (k, (r, c)) in runs.iter().enumerate() {
        log::debug!("ica restart {k}: {} sweeps, contrast {c:.6}", r.log.len());
        if r.converged && best.is_none_or(|(_, b)| *c > b) {
            best = Some((k, *c));
        }
    }
    let Some((k, _)) = best else {
        let first = runs.into_iter().next().expect("at least one restart").0;
        return Err(Error::NoConvergence {
            sweeps: opts.max_sweeps,
            last_change: first.log.last().copied().unwrap_or(f64::NAN),
            log: first.log,
        });
    };
    let chosen = runs.into_iter().nth(k).expect("index from enumerate").0;
    let out = w.transform(&chosen.rot)?;
    Ok((
        IcaStage {
            rotation: chosen.rot,
            convergence: chosen.log,
        },
        out,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::pca::{pca_whiten, DimRule};

    fn uniforms(t: usize, d: usize, seed: u64) -> TimeSeries {
        let mut rng = seeding::rng(seed, 1);
        let raw = DMatrix::from_fn(t, d, |_, _| rng.random_range(-1.0..1.0));
        let (_, w) = pca_whiten(&TimeSeries::new(raw).unwrap(), DimRule::Fixed(d)).unwrap();
        w
    }

    fn rotation2(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    fn signed_permutation_error(m: &DMatrix<f64>) -> f64 {
        // largest entry outside each row's dominant position
        let mut worst: f64 = 0.0;
        for row in m.row_iter() {
            let imax = row.transpose().iamax();
            for (j, v) in row.iter().enumerate() {
                if j != imax {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    #[test]
    fn rotation_is_orthogonal() {
        let w = uniforms(4_000, 5, 1);
        let (stage, out) = ica(&w, &IcaOptions::default()).unwrap();
        let r = &stage.rotation;
        assert!((r.transpose() * r - DMatrix::identity(5, 5)).amax() < 1e-8);
        assert!((out.covariance() - DMatrix::identity(5, 5)).amax() < 1e-3);
    }

    #[test]
    fn independent_input_yields_signed_permutation() {
        // raw uniforms scaled to unit variance, no whitening rotation
        let mut rng = seeding::rng(3, 1);
        let t = 10_000;
        let mut raw = DMatrix::from_fn(t, 3, |_, _| rng.random_range(-1.0..1.0));
        let u = TimeSeries::new(raw.clone()).unwrap();
        let cov = u.covariance();
        for (j, mut col) in raw.column_iter_mut().enumerate() {
            col /= cov[(j, j)].sqrt();
        }
        // exact whitening keeps the basis close to canonical
        let w = TimeSeries::new(raw).unwrap();
        let (pca, w) = pca_whiten(&w, DimRule::Fixed(3)).unwrap();
        let (stage, _) = ica(&w, &IcaOptions::default()).unwrap();
        let total = &stage.rotation * &pca.basis;
        for row in total.row_iter() {
            let n = row.norm();
            let strong = row.iter().filter(|v| v.abs() / n > 0.99).count();
            assert_eq!(strong, 1, "{total}");
        }
    }

    #[test]
    fn one_dimensional_rotation_is_sign() {
        let w = uniforms(1_000, 1, 4);
        let (stage, _) = ica(&w, &IcaOptions::default()).unwrap();
        assert!((stage.rotation[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    /// Negentropy proxy `(E[log cosh y] - E[log cosh nu])^2` summed over outputs.
    fn contrast(w: &TimeSeries, m: &DMatrix<f64>) -> f64 {
        let y = w.transform(m).unwrap();
        let gauss = 0.374_567_207_491_438_6; // E[log cosh] for N(0, 1)
        y.data()
            .column_iter()
            .map(|c| {
                let e = c.iter().map(|v| v.cosh().ln()).sum::<f64>() / c.len() as f64;
                (e - gauss).powi(2)
            })
            .sum()
    }

    #[test]
    fn demixes_thirty_degree_rotation() {
        let mut rng = seeding::rng(5, 1);
        let t = 10_000;
        let s = 3f64.sqrt();
        let raw = DMatrix::from_fn(t, 2, |_, _| rng.random_range(-s..s));
        let mixing = rotation2(30f64.to_radians());
        let w = TimeSeries::new(raw * mixing.transpose()).unwrap();
        // oracle: scan the contrast over rotation angles
        let best_angle = (0..900)
            .map(|k| (k as f64 * 0.1).to_radians())
            .max_by(|a, b| contrast(&w, &rotation2(*a)).total_cmp(&contrast(&w, &rotation2(*b))))
            .unwrap();
        let oracle = rotation2(best_angle) * &mixing;
        assert!(signed_permutation_error(&oracle) < 0.05, "{oracle}");

        let (_, white) = pca_whiten(&w, DimRule::Fixed(2)).unwrap();
        let (pca, _) = pca_whiten(&w, DimRule::Fixed(2)).unwrap();
        let (stage, _) = ica(&white, &IcaOptions::default()).unwrap();
        let global = &stage.rotation * &pca.basis * &mixing;
        assert!(signed_permutation_error(&global) < 0.05, "{global}");
    }

    #[test]
    fn rejects_non_white_input() {
        let mut rng = seeding::rng(6, 1);
        let raw = DMatrix::from_fn(500, 2, |_, _| rng.random_range(-5.0..5.0));
        assert!(matches!(
            ica(&TimeSeries::new(raw).unwrap(), &IcaOptions::default()),
            Err(Error::NotWhite { .. })
        ));
    }

    #[test]
    fn reports_non_convergence_with_log() {
        let w = uniforms(2_000, 4, 7);
        let opts = IcaOptions {
            max_sweeps: 1,
            tol: 1e-15,
            restarts: 1,
            seed: 1,
        };
        match ica(&w, &opts) {
            Err(Error::NoConvergence { log, .. }) => assert_eq!(log.len(), 1),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
