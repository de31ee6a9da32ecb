//! Partition scores built from pairwise dependence.

use crate::error::{Error, Result};
use crate::isa::dependence::{pairwise_dependence, Estimator, SimilarityGraph};
use crate::isa::ncut::Partition;
use crate::tsmodel::TimeSeries;

/// Between-cluster dependence minus within-cluster dependence, summed over
/// unordered pairs. Lower is better.
pub fn graph_objective(g: &SimilarityGraph, part: &Partition) -> f64 {
    let a = part.assignment();
    let w = g.weights();
    let mut score = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if a[i] == a[j] {
                score -= w[(i, j)];
            } else {
                score += w[(i, j)];
            }
        }
    }
    score
}

/// Mean silhouette of the partition on similarity weights: for coordinate
/// `i` with mean weight `a` to its own cluster and best mean weight `b` to
/// another cluster, `s_i = (a - b) / max(a, b)`. Singletons score 0, as does
/// a single cluster. Higher is better.
pub fn silhouette(g: &SimilarityGraph, part: &Partition) -> f64 {
    let k = part.clusters();
    let n = part.len();
    if k < 2 {
        return 0.0;
    }
    let a = part.assignment();
    let w = g.weights();
    let sizes: Vec<usize> = part.groups().iter().map(Vec::len).collect();
    let mut total = 0.0;
    for i in 0..n {
        if sizes[a[i]] == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[a[j]] += w[(i, j)];
            }
        }
        let own = sums[a[i]] / (sizes[a[i]] - 1) as f64;
        let other = (0..k)
            .filter(|&c| c != a[i])
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = own.max(other);
        if scale > 0.0 {
            total += (own - other) / scale;
        }
    }
    total / n as f64
}

/// [`graph_objective`] on a freshly estimated dependence graph of `y`.
pub fn ipa_objective(y: &TimeSeries, part: &Partition, estimator: &Estimator, seed: u64) -> Result<f64> {
    if part.len() != y.dim() {
        return Err(Error::Shape(format!(
            "partition covers {} coordinates, series has {}",
            part.len(),
            y.dim()
        )));
    }
    let g = pairwise_dependence(y, estimator, seed)?;
    Ok(graph_objective(&g, part))
}
