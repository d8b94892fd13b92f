//! Clustering detector: distance to the own centroid of a deterministic
//! k-means partition, scored robustly within each cluster.

use super::{euclidean, FucodError, Matrix};
use crate::stats;

const MAX_ITERATIONS: usize = 100;
const CONVERGENCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Distance of each sample to its assigned centroid.
    pub radius: Vec<f64>,
    pub iterations: usize,
}

fn norm(row: &[f64]) -> f64 {
    row.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// First index of the maximum; NaN-free input assumed.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Farthest-first traversal starting at the sample of largest norm.
fn farthest_first(points: &Matrix, k: usize) -> Vec<Vec<f64>> {
    let n = points.rows();
    let first = argmax(points.iter_rows().map(norm));
    let mut centroids = vec![points.row(first).to_vec()];
    let mut nearest: Vec<f64> = (0..n).map(|i| euclidean(points.row(i), points.row(first))).collect();
    while centroids.len() < k {
        let next = argmax(nearest.iter().copied());
        let c = points.row(next).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(euclidean(points.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &Matrix, centroids: &[Vec<f64>], assignment: &mut [usize], radius: &mut [f64]) {
    for (i, row) in points.iter_rows().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let d = euclidean(row, centroid);
            if d < best.1 {
                best = (c, d);
            }
        }
        assignment[i] = best.0;
        radius[i] = best.1;
    }
}

/// Lloyd iterations from a farthest-first start. Ties go to the lower
/// centroid index; an empty cluster is re-seeded with the sample farthest
/// from its centroid.
pub fn kmeans(points: &Matrix, k: usize) -> Result<KMeans, FucodError> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(FucodError::KTooLarge { what: "k_clusters", k, n });
    }
    let dim = points.cols();
    let mut centroids = farthest_first(points, k);
    let mut assignment = vec![0; n];
    let mut radius = vec![0.0; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        assign(points, &centroids, &mut assignment, &mut radius);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, row) in points.iter_rows().enumerate() {
            let c = assignment[i];
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &m)| s.into_iter().map(|v| v / m as f64).collect())
            .collect();
        for c in 0..k {
            if counts[c] == 0 {
                let far = argmax(radius.iter().copied());
                next[c] = points.row(far).to_vec();
                radius[far] = 0.0;
            }
        }
        let movement = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| euclidean(a, b))
            .fold(0.0, f64::max);
        centroids = next;
        if movement < CONVERGENCE {
            break;
        }
    }
    assign(points, &centroids, &mut assignment, &mut radius);
    Ok(KMeans {
        centroids,
        assignment,
        radius,
        iterations,
    })
}

/// Per-sample cluster score: the distance to the own centroid compared with
/// the other members of the cluster (median plus `mult` MADs saturates).
/// Members of singleton clusters score 0.
pub fn cluster_scores(points: &Matrix, k: usize, mult: f64, eps: f64) -> Result<Vec<f64>, FucodError> {
    let km = kmeans(points, k)?;
    let mut scores = vec![0.0; points.rows()];
    for c in 0..k {
        let members: Vec<usize> = (0..points.rows()).filter(|&i| km.assignment[i] == c).collect();
        if members.len() < 2 {
            continue;
        }
        let r: Vec<f64> = members.iter().map(|&i| km.radius[i]).collect();
        let (med, mad) = stats::median_mad(&r);
        for (&i, &ri) in members.iter().zip(&r) {
            scores[i] = stats::robust_score(ri, med, mad, mult, eps);
        }
    }
    Ok(scores)
}
