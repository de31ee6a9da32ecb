//! Multiclass normalized-cut clustering of the dependence graph: spectral
//! embedding of the normalized affinity followed by alternating
//! rotation/indicator discretization, best of several seeded restarts.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isa::dependence::SimilarityGraph;
use crate::seeding;
use crate::tsmodel::{symmetrize, ComponentLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KRule {
    Fixed(usize),
    /// Cluster count from the normalized-Laplacian eigen gap, at most this many.
    Eigengap(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NcutOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NcutOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 100,
            seed: 0,
        }
    }
}

/// Coordinate-to-cluster assignment with clusters numbered by their
/// smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
}

impl Partition {
    /// Relabels arbitrary cluster ids so that cluster 0 holds coordinate 0,
    /// cluster 1 the smallest coordinate not in cluster 0, and so on.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("empty partition".into()));
        }
        let mut map = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Ok(Self { assignment })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn clusters(&self) -> usize {
        self.assignment.iter().max().map_or(0, |m| m + 1)
    }

    /// Members of every cluster, ascending.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.clusters()];
        for (i, &c) in self.assignment.iter().enumerate() {
            g[c].push(i);
        }
        g
    }

    pub fn layout(&self) -> ComponentLayout {
        ComponentLayout::new(self.groups().iter().map(Vec::len).collect()).expect("non-empty clusters")
    }

    /// `order[k]` is the input coordinate placed at output position `k`.
    pub fn order(&self) -> Vec<usize> {
        self.groups().concat()
    }

    /// Permutation matrix `P` with `(P y)_k = y_{order[k]}`.
    pub fn permutation_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut p = DMatrix::zeros(n, n);
        for (k, &i) in self.order().iter().enumerate() {
            p[(k, i)] = 1.0;
        }
        p
    }
}

fn components(w: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = w.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![s];
        let mut comp = Vec::new();
        seen[s] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for u in 0..n {
                if !seen[u] && w[(v, u)] > 0.0 {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Normalized cut value `sum_k cut(A_k, V \ A_k) / assoc(A_k, V)`.
pub fn ncut_value(w: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let mut cut = vec![0.0; k];
    let mut assoc = vec![0.0; k];
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            let v = w[(i, j)];
            assoc[labels[i]] += v;
            if labels[i] != labels[j] {
                cut[labels[i]] += v;
            }
        }
    }
    cut.iter()
        .zip(&assoc)
        .map(|(c, a)| if *a > 0.0 { c / a } else { 0.0 })
        .sum()
}

struct Spectrum {
    /// Normalized-Laplacian eigenvalues, ascending.
    laplacian: Vec<f64>,
    /// `D^{-1/2} V`, columns matching `laplacian`.
    embedding: DMatrix<f64>,
}

fn spectrum(w: &DMatrix<f64>) -> Spectrum {
    let n = w.nrows();
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut m = DMatrix::from_fn(n, n, |i, j| w[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    symmetrize(&mut m);
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let laplacian = order.iter().map(|&i| 1.0 - eig.eigenvalues[i]).collect();
    let mut embedding = eig.eigenvectors.select_columns(&order);
    for (i, mut row) in embedding.row_iter_mut().enumerate() {
        row *= inv_sqrt[i];
    }
    Spectrum { laplacian, embedding }
}

/// Candidate cluster counts in `[lo, hi]`, best eigen gap first.
fn gap_candidates(lap: &[f64], lo: usize, hi: usize) -> Vec<(usize, f64)> {
    let n = lap.len();
    if lo >= n {
        return vec![(n, f64::INFINITY)];
    }
    let mut c: Vec<(usize, f64)> = (lo..=hi.min(n - 1)).map(|k| (k, lap[k] - lap[k - 1])).collect();
    c.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    c
}

/// One discretization run from a seeded initial rotation.
fn discretize(x: &DMatrix<f64>, k: usize, seed: u64, restart: u64, max_iter: usize) -> Vec<usize> {
    let n = x.nrows();
    let mut rng = seeding::rng(seed, restart);
    let mut rot = DMatrix::zeros(k, k);
    let first = rng.random_range(0..n);
    rot.set_column(0, &x.row(first).transpose());
    let mut c = vec![0.0; n];
    for j in 1..k {
        let prev = x * rot.column(j - 1);
        for (ci, p) in c.iter_mut().zip(prev.iter()) {
            *ci += p.abs();
        }
        let next = c
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty");
        rot.set_column(j, &x.row(next).transpose());
    }
    let mut labels = vec![0; n];
    let mut last = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        let proj = x * &rot;
        for (i, l) in labels.iter_mut().enumerate() {
            *l = proj.row(i).transpose().argmax().0;
        }
        let mut ind = DMatrix::zeros(n, k);
        for (i, &l) in labels.iter().enumerate() {
            ind[(i, l)] = 1.0;
        }
        let svd = (ind.transpose() * x).svd(true, true);
        let objective = svd.singular_values.sum();
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        rot = vt.transpose() * u.transpose();
        if (objective - last).abs() < 1e-12 * objective.max(1.0) {
            break;
        }
        last = objective;
    }
    labels
}

fn cluster_fixed(w: &DMatrix<f64>, spec: &Spectrum, k: usize, opts: &NcutOptions) -> Vec<usize> {
    let n = w.nrows();
    if k == 1 {
        return vec![0; n];
    }
    if k >= n {
        return (0..n).collect();
    }
    let mut x = spec.embedding.columns(0, k).into_owned();
    for mut row in x.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let runs: Vec<Vec<usize>> = restart_map(opts.restarts.max(1), |r| {
        discretize(&x, k, opts.seed, r as u64, opts.max_iter)
    });
    // full partitions first, then lowest normalized cut, then earliest restart
    runs.into_iter()
        .map(|labels| {
            let used = {
                let mut u = labels.clone();
                u.sort_unstable();
                u.dedup();
                u.len()
            };
            let score = ncut_value(w, &labels, k);
            (k - used, score, labels)
        })
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .map(|(_, _, l)| l)
        .expect("at least one restart")
}

#[cfg(feature = "parallel")]
fn restart_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn restart_map<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Result of clustering, with the spectrum used to choose the count.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub partition: Partition,
    pub laplacian_spectrum: Vec<f64>,
    /// Cluster counts considered by the eigengap rule.
    pub candidates: Vec<usize>,
}

/// Spectral clustering of `g` into `k_rule` clusters.
///
/// Under `Eigengap(max)` the three largest gaps of the normalized-Laplacian
/// spectrum give candidate counts, each clustered and scored by
/// [`crate::isa::objective::silhouette`]; the highest score wins, earlier
/// (larger gap) candidates on ties.
pub fn ncut_cluster(g: &SimilarityGraph, k_rule: KRule, opts: &NcutOptions) -> Result<Clustering> {
    let n = g.len();
    let raw = g.weights();
    let comps = components(raw);
    let max = match k_rule {
        KRule::Fixed(m) | KRule::Eigengap(m) => m,
    };
    if max == 0 || max > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count bound {max} must be in 1..={n}"
        )));
    }
    if comps.len() > max {
        return Err(Error::TooManyComponents { max, components: comps });
    }
    // self-loops keep isolated vertices well-defined in the normalized affinity
    let positive: Vec<f64> = raw.iter().copied().filter(|&v| v > 0.0).collect();
    let scale = if positive.is_empty() {
        1.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    };
    let mut w = raw.clone();
    for i in 0..n {
        w[(i, i)] = 1e-6 * scale;
    }
    let spec = spectrum(&w);
    let (k, candidates) = match k_rule {
        KRule::Fixed(m) => (m, vec![m]),
        KRule::Eigengap(m) => {
            let cands = gap_candidates(&spec.laplacian, comps.len().max(1), m);
            let top: Vec<(usize, f64)> = cands.into_iter().take(3).collect();
            let mut chosen = top[0].0;
            let contenders: Vec<usize> = top.iter().map(|(k, _)| *k).collect();
            if contenders.len() > 1 {
                let mut best_score = f64::NEG_INFINITY;
                for &kc in &contenders {
                    let labels = cluster_fixed(&w, &spec, kc, opts);
                    let p = Partition::from_labels(&labels)?;
                    let s = crate::isa::objective::silhouette(g, &p);
                    if s > best_score {
                        best_score = s;
                        chosen = kc;
                    }
                }
            }
            (chosen, top.iter().map(|(k, _)| *k).collect())
        }
    };
    let labels = cluster_fixed(&w, &spec, k, opts);
    Ok(Clustering {
        partition: Partition::from_labels(&labels)?,
        laplacian_spectrum: spec.laplacian,
        candidates,
    })
}
