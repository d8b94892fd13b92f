//! Density-based detector: Local Outlier Factor.

use super::knn::NeighborGraph;
use super::{FucodError, Matrix};

/// Raw LOF per sample from a neighbour graph, and its score
/// `clamp((lof - 1) / (cap - 1), 0, 1)`.
pub(crate) fn lof_from_graph(graph: &NeighborGraph, cap: f64, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let n = graph.len();
    let lrd: Vec<f64> = (0..n)
        .map(|p| {
            let reach: f64 = graph
                .neighbors(p)
                .iter()
                .zip(graph.distances(p))
                .map(|(&o, &d)| graph.k_distance(o).max(d))
                .sum::<f64>()
                / graph.k() as f64;
            // Duplicates give zero reachability; cap the density.
            1.0 / reach.max(eps)
        })
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|p| {
            graph.neighbors(p).iter().map(|&o| lrd[o] / lrd[p]).sum::<f64>() / graph.k() as f64
        })
        .collect();
    let scores = raw
        .iter()
        .map(|&lof| ((lof - 1.0) / (cap - 1.0)).clamp(0.0, 1.0))
        .collect();
    (raw, scores)
}

/// Local Outlier Factor with `MinPts = k`, plus scores in [0, 1] that
/// saturate at `cap`.
pub fn lof_scores(
    points: &Matrix,
    k: usize,
    cap: f64,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>), FucodError> {
    let graph = NeighborGraph::build(points, k)?;
    Ok(lof_from_graph(&graph, cap, eps))
}
