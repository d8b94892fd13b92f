//! Independent reference implementations shared by the integration tests
//! and the acceptance suite. Nothing here calls into the detectors.

#![allow(dead_code)]

use qualflow::fucod::Matrix;
use qualflow::ingest::{Gaussian, SplitMix64};

/// Random dataset `i` of the oracle corpus: N in [20, 300], 1 to 4 columns,
/// two Gaussian blobs plus a few scattered points.
pub fn corpus_dataset(i: u64) -> Matrix {
    let mut rng = SplitMix64::new(0x5EED_0000 + i);
    let n = 20 + (rng.next_u64() % 281) as usize;
    let dims = 1 + (rng.next_u64() % 4) as usize;
    let mut gauss = Gaussian::new(rng.next_u64());
    let mut data = Vec::with_capacity(n * dims);
    for j in 0..n {
        let (center, spread) = match j % 10 {
            0 => (0.0, 8.0),
            1..=5 => (0.0, 1.0),
            _ => (5.0, 0.5),
        };
        for _ in 0..dims {
            data.push(center + spread * gauss.next());
        }
    }
    Matrix::new(n, dims, data)
}

pub fn corpus_k(i: u64, n: usize) -> usize {
    (2 + (i as usize * 7) % 14).min(n - 1)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += (x - y) * (x - y);
    }
    s.sqrt()
}

/// All pairwise distances.
pub fn distance_matrix(x: &Matrix) -> Vec<Vec<f64>> {
    (0..x.rows())
        .map(|i| (0..x.rows()).map(|j| dist(x.row(i), x.row(j))).collect())
        .collect()
}

/// The k nearest other points of `p`, nearest first, ties to the lower index.
pub fn k_nearest(d: &[Vec<f64>], p: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..d.len()).filter(|&o| o != p).collect();
    others.sort_by(|&a, &b| d[p][a].total_cmp(&d[p][b]).then(a.cmp(&b)));
    others.truncate(k);
    others
}

/// Mean distance to the k nearest neighbours, summed nearest first.
pub fn knn_mean_oracle(x: &Matrix, k: usize) -> Vec<f64> {
    let d = distance_matrix(x);
    (0..x.rows())
        .map(|p| {
            let mut s = 0.0;
            for o in k_nearest(&d, p, k) {
                s += d[p][o];
            }
            s / k as f64
        })
        .collect()
}

/// Local Outlier Factor written out from its definitions:
/// k-distance, reachability distance, local reachability density, ratio.
pub fn lof_oracle(x: &Matrix, k: usize, eps: f64) -> Vec<f64> {
    let d = distance_matrix(x);
    let n = x.rows();
    let hoods: Vec<Vec<usize>> = (0..n).map(|p| k_nearest(&d, p, k)).collect();
    let k_distance = |o: usize| d[o][hoods[o][k - 1]];
    let reach_dist = |p: usize, o: usize| f64::max(k_distance(o), d[p][o]);
    let lrd: Vec<f64> = (0..n)
        .map(|p| {
            let total: f64 = hoods[p].iter().map(|&o| reach_dist(p, o)).sum();
            let mean = total / k as f64;
            if mean < eps {
                1.0 / eps
            } else {
                1.0 / mean
            }
        })
        .collect();
    (0..n)
        .map(|p| {
            let ratio: f64 = hoods[p].iter().map(|&o| lrd[o] / lrd[p]).sum();
            ratio / k as f64
        })
        .collect()
}

/// Centroid of a trapezoid (a, b, c, d) in closed form.
pub fn trapezoid_centroid(a: f64, b: f64, c: f64, d: f64) -> f64 {
    // Split into rising triangle, plateau and falling triangle.
    let parts = [
        ((b - a) / 2.0, a + 2.0 * (b - a) / 3.0),
        (c - b, (b + c) / 2.0),
        ((d - c) / 2.0, c + (d - c) / 3.0),
    ];
    let area: f64 = parts.iter().map(|p| p.0).sum();
    parts.iter().map(|p| p.0 * p.1).sum::<f64>() / area
}

/// Published two-sided Grubbs critical values at alpha = 0.05.
pub const GRUBBS_TABLE_005: [(usize, f64); 4] = [(3, 1.155), (5, 1.715), (10, 2.290), (20, 2.709)];
