//! Pairwise dependence between coordinates: first regularized kernel
//! canonical correlation (Gaussian kernel, incomplete Cholesky), or the
//! cheap `|corr(|y_i|, |y_j|)|` fallback.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;
use crate::tsmodel::TimeSeries;

/// Symmetric non-negative weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    weights: DMatrix<f64>,
}

impl SimilarityGraph {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::Shape(format!(
                "similarity matrix must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is non-zero")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidArgument(format!("weight ({i}, {j}) = {w}")));
                }
                if (w - weights[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!("weights not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.nrows() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Estimator {
    Kcca {
        /// Kernel width; `None` uses the median pairwise distance of each coordinate.
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_max_points")]
        max_points: usize,
    },
    AbsCorr,
}

fn default_kappa() -> f64 {
    2e-2
}
fn default_eta() -> f64 {
    1e-4
}
fn default_max_points() -> usize {
    2000
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Kcca {
            sigma: None,
            kappa: default_kappa(),
            eta: default_eta(),
            max_points: default_max_points(),
        }
    }
}

const MAX_RANK: usize = 200;
const MEDIAN_POINTS: usize = 500;

fn median_distance(x: &[f64]) -> f64 {
    let n = x.len().min(MEDIAN_POINTS);
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push((x[i] - x[j]).abs());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Pivoted incomplete Cholesky of the Gaussian Gram matrix of `x`;
/// returns `G` with `K ~ G G^T`, stopping once the residual trace drops
/// below `tol`.
fn incomplete_cholesky(x: &[f64], sigma: f64, tol: f64) -> DMatrix<f64> {
    let n = x.len();
    let kern = |a: f64, b: f64| (-(a - b).powi(2) / (2.0 * sigma * sigma)).exp();
    let mut diag = vec![1.0; n];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    while cols.len() < MAX_RANK.min(n) {
        let resid: f64 = diag.iter().sum();
        if resid <= tol {
            break;
        }
        let (p, &dp) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        if dp <= 0.0 {
            break;
        }
        let root = dp.sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            let mut v = kern(x[i], x[p]);
            for c in &cols {
                v -= c[i] * c[p];
            }
            col[i] = v / root;
        }
        for (i, d) in diag.iter_mut().enumerate() {
            *d = (*d - col[i] * col[i]).max(0.0);
        }
        diag[p] = 0.0;
        pivots.push(p);
        cols.push(col);
    }
    let m = cols.len();
    DMatrix::from_fn(n, m, |i, j| cols[j][i])
}

/// `U diag(lambda / (lambda + c))` for the centered Gram matrix, so that a
/// pair's first canonical correlation is the top singular value of
/// `F_i^T F_j`.
fn kernel_factor(x: &[f64], sigma: f64, kappa: f64, eta: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut g = incomplete_cholesky(x, sigma, eta * n as f64);
    if g.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    for mut col in g.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let svd = g.svd(true, false);
    let u = svd.u.expect("requested");
    let c = n as f64 * kappa / 2.0;
    let mut f = u;
    for (k, mut col) in f.column_iter_mut().enumerate() {
        let lambda = svd.singular_values[k].powi(2);
        col *= lambda / (lambda + c);
    }
    f
}

#[cfg(feature = "parallel")]
fn pair_map<F>(pairs: &[(usize, usize)], f: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    pairs.par_iter().map(|&(i, j)| f(i, j)).collect()
}

#[cfg(not(feature = "parallel"))]
fn pair_map<F>(pairs: &[(usize, usize)], f: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64,
{
    pairs.iter().map(|&(i, j)| f(i, j)).collect()
}

fn assemble(d: usize, pairs: &[(usize, usize)], vals: &[f64]) -> Result<SimilarityGraph> {
    let mut w = DMatrix::zeros(d, d);
    for (&(i, j), &v) in pairs.iter().zip(vals) {
        let v = v.max(0.0);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    SimilarityGraph::new(w)
}

/// Dependence score for every unordered pair of coordinates of `y`.
pub fn pairwise_dependence(y: &TimeSeries, estimator: &Estimator, seed: u64) -> Result<SimilarityGraph> {
    let d = y.dim();
    if d < 2 {
        return Err(Error::InvalidArgument(
            "pairwise dependence needs at least two coordinates".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    match *estimator {
        Estimator::AbsCorr => {
            let mut cols = Vec::with_capacity(d);
            for (k, c) in y.data().column_iter().enumerate() {
                let mut a: DVector<f64> = c.map(f64::abs);
                let m = a.mean();
                a.add_scalar_mut(-m);
                let norm = a.norm();
                if norm == 0.0 {
                    return Err(Error::DegenerateCoordinate { index: k });
                }
                cols.push(a / norm);
            }
            let vals = pair_map(&pairs, |i, j| cols[i].dot(&cols[j]).abs());
            assemble(d, &pairs, &vals)
        }
        Estimator::Kcca {
            sigma,
            kappa,
            eta,
            max_points,
        } => {
            if kappa <= 0.0 || eta <= 0.0 || max_points < 2 {
                return Err(Error::InvalidArgument(format!(
                    "kcca needs kappa > 0, eta > 0, max_points >= 2 (got {kappa}, {eta}, {max_points})"
                )));
            }
            let t = y.len();
            let rows: Vec<usize> = if t > max_points {
                let mut rng = seeding::rng(seed, 0);
                let mut idx = sample(&mut rng, t, max_points).into_vec();
                idx.sort_unstable();
                idx
            } else {
                (0..t).collect()
            };
            let mut factors = Vec::with_capacity(d);
            for k in 0..d {
                let x: Vec<f64> = rows.iter().map(|&r| y.data()[(r, k)]).collect();
                let s = match sigma {
                    Some(s) => s,
                    None => median_distance(&x),
                };
                let spread =
                    x.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - x.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                if s <= 0.0 || spread <= 0.0 {
                    return Err(Error::DegenerateCoordinate { index: k });
                }
                factors.push(kernel_factor(&x, s, kappa, eta));
            }
            let vals = pair_map(&pairs, |i, j| {
                if factors[i].ncols() == 0 || factors[j].ncols() == 0 {
                    return 0.0;
                }
                let m = factors[i].tr_mul(&factors[j]);
                m.svd(false, false).singular_values.max()
            });
            assemble(d, &pairs, &vals)
        }
    }
}
