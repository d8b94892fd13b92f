//! Fuzzy combination of outlier detectors.
//!
//! Four detectors look at the same standardized observations from
//! different angles:
//!
//! * [`grubbs`]: deviation from a normal distribution,
//! * [`knn`]: mean distance to the nearest neighbours,
//! * [`cluster`]: distance to the centroid of the own k-means cluster,
//! * [`lof`]: local density compared with the neighbours' density.
//!
//! Each produces a score in [0, 1]; [`fis`] fuses the four scores of a
//! sample into its outlier level.

pub mod cluster;
pub mod fis;
pub mod grubbs;
pub mod knn;
pub mod lof;
pub mod standardize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DetectorScores, FeatureMatrix, OutlierLevel};

pub use cluster::cluster_scores;
pub use fis::{fis_fuse, RuleBase};
pub use grubbs::{grubbs_critical, grubbs_scores};
pub use knn::distance_scores;
pub use lof::lof_scores;
pub use standardize::{standardize, ColumnStats, Standardized};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FucodError {
    #[error("TOO_FEW_SAMPLES: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("K_TOO_LARGE: {what} = {k} with {n} samples")]
    KTooLarge { what: &'static str, k: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Dense row-major matrix of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.cols.max(1)).copied()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }
}

impl From<&FeatureMatrix> for Matrix {
    fn from(f: &FeatureMatrix) -> Self {
        Matrix::from_rows(f.rows())
    }
}

/// Euclidean distance; coordinates are summed in order so that every
/// caller gets bit-identical values for the same pair.
#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FucodConfig {
    /// Grubbs significance level.
    pub alpha: f64,
    /// Neighbour count for the distance detector and LOF.
    pub k_nn: usize,
    pub k_clusters: usize,
    /// Raw LOF that maps to score 1.
    pub lof_cap: f64,
    /// Distance and cluster scores saturate this many MADs above the median.
    pub robust_spread_mult: f64,
    pub eps: f64,
}

impl Default for FucodConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            k_nn: 10,
            k_clusters: 3,
            lof_cap: 2.0,
            robust_spread_mult: 5.0,
            eps: 1e-12,
        }
    }
}

impl FucodConfig {
    /// Checks the configuration against a dataset of `n` samples.
    pub fn validate(&self, n: usize) -> Result<(), FucodError> {
        if n < 3 {
            return Err(FucodError::TooFewSamples { need: 3, got: n });
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FucodError::InvalidConfig(format!("alpha = {}", self.alpha)));
        }
        if self.k_nn < 2 {
            return Err(FucodError::InvalidConfig(format!("k_nn = {}", self.k_nn)));
        }
        if self.k_nn >= n {
            return Err(FucodError::KTooLarge {
                what: "k_nn",
                k: self.k_nn,
                n,
            });
        }
        if self.k_clusters < 1 {
            return Err(FucodError::InvalidConfig("k_clusters = 0".into()));
        }
        if self.k_clusters > n {
            return Err(FucodError::KTooLarge {
                what: "k_clusters",
                k: self.k_clusters,
                n,
            });
        }
        if !(self.lof_cap > 1.0 && self.lof_cap.is_finite()) {
            return Err(FucodError::InvalidConfig(format!("lof_cap = {}", self.lof_cap)));
        }
        if !(self.robust_spread_mult > 0.0 && self.robust_spread_mult.is_finite()) {
            return Err(FucodError::InvalidConfig(format!(
                "robust_spread_mult = {}",
                self.robust_spread_mult
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(FucodError::InvalidConfig(format!("eps = {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FucodOutput {
    pub levels: Vec<OutlierLevel>,
    pub scores: Vec<DetectorScores>,
    /// Feature dimensions excluded for having zero spread.
    pub dropped: Vec<bool>,
    /// Raw detector outputs before normalisation, kept for auditing.
    pub raw_knn: Vec<f64>,
    pub raw_lof: Vec<f64>,
}

/// Outlier levels for the 4-D coil features.
pub fn fucod_run(features: &FeatureMatrix, config: &FucodConfig) -> Result<FucodOutput, FucodError> {
    fucod_run_matrix(&Matrix::from(features), config)
}

/// Outlier levels for observations of any dimension.
pub fn fucod_run_matrix(x: &Matrix, config: &FucodConfig) -> Result<FucodOutput, FucodError> {
    let n = x.rows();
    config.validate(n)?;
    let z = standardize(x, config.eps)?;
    let g = grubbs::grubbs_scores(&z, config.alpha)?;
    let graph = knn::NeighborGraph::build(&z.points, config.k_nn)?;
    let (raw_knn, d) = knn::scores_from_graph(&graph, config.robust_spread_mult, config.eps);
    let c = cluster::cluster_scores(&z.points, config.k_clusters, config.robust_spread_mult, config.eps)?;
    let (raw_lof, l) = lof::lof_from_graph(&graph, config.lof_cap, config.eps);

    let rules = RuleBase::standard();
    let scores: Vec<DetectorScores> = (0..n)
        .map(|j| DetectorScores {
            g: g[j],
            d: d[j],
            c: c[j],
            l: l[j],
        })
        .collect();
    let levels = scores.iter().map(|s| rules.fuse(s)).collect();
    Ok(FucodOutput {
        levels,
        scores,
        dropped: z.stats.iter().map(|s| s.dropped).collect(),
        raw_knn,
        raw_lof,
    })
}
