//! Exact k-nearest-neighbour graph and the distance-based detector.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{euclidean, FucodError, Matrix};
use crate::stats;

/// For each sample its `k` nearest other samples, nearest first.
/// Equal distances are ordered by sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    idx: Vec<usize>,
    dist: Vec<f64>,
}

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl NeighborGraph {
    /// Brute force over all pairs; rows are processed in parallel.
    pub fn build(points: &Matrix, k: usize) -> Result<Self, FucodError> {
        let n = points.rows();
        if k == 0 || k >= n {
            return Err(FucodError::KTooLarge { what: "k_nn", k, n });
        }
        let rows: Vec<Vec<(f64, usize)>> = (0..n)
            .into_par_iter()
            .map_init(
                || Vec::with_capacity(n),
                |cand, i| {
                    cand.clear();
                    let p = points.row(i);
                    cand.extend(
                        (0..n)
                            .filter(|&j| j != i)
                            .map(|j| (euclidean(p, points.row(j)), j)),
                    );
                    cand.select_nth_unstable_by(k - 1, by_distance_then_index);
                    let mut nearest = cand[..k].to_vec();
                    nearest.sort_unstable_by(by_distance_then_index);
                    nearest
                },
            )
            .collect();
        let mut idx = Vec::with_capacity(n * k);
        let mut dist = Vec::with_capacity(n * k);
        for row in rows {
            for (d, j) in row {
                dist.push(d);
                idx.push(j);
            }
        }
        Ok(Self { k, idx, dist })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.idx.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.idx[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.dist[i * self.k..(i + 1) * self.k]
    }

    /// Distance to the k-th nearest neighbour.
    pub fn k_distance(&self, i: usize) -> f64 {
        self.dist[(i + 1) * self.k - 1]
    }

    /// Mean distance to the k nearest neighbours, summed nearest first.
    pub fn mean_distance(&self, i: usize) -> f64 {
        self.distances(i).iter().sum::<f64>() / self.k as f64
    }
}

pub(crate) fn scores_from_graph(graph: &NeighborGraph, mult: f64, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let raw: Vec<f64> = (0..graph.len()).map(|i| graph.mean_distance(i)).collect();
    let (med, mad) = stats::median_mad(&raw);
    let scores = raw
        .iter()
        .map(|&r| stats::robust_score(r, med, mad, mult, eps))
        .collect();
    (raw, scores)
}

/// Mean distance of each sample to its `k` nearest neighbours (`raw`) and
/// its robust score: the excess over the median raw value in units of
/// `mult` median absolute deviations, clamped to [0, 1].
pub fn distance_scores(
    points: &Matrix,
    k: usize,
    mult: f64,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>), FucodError> {
    let graph = NeighborGraph::build(points, k)?;
    Ok(scores_from_graph(&graph, mult, eps))
}
