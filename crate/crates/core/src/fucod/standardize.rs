//! Per-dimension z-scores.

use super::{FucodError, Matrix};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
    /// Zero-spread column, left out of all distance computations.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    /// Retained columns only, as z-scores.
    pub points: Matrix,
    pub stats: Vec<ColumnStats>,
}

/// Centres every column and scales it to unit sample standard deviation.
/// Columns whose standard deviation is below `eps` are dropped.
pub fn standardize(x: &Matrix, eps: f64) -> Result<Standardized, FucodError> {
    let n = x.rows();
    if n < 2 {
        return Err(FucodError::TooFewSamples { need: 2, got: n });
    }
    let stats: Vec<ColumnStats> = (0..x.cols())
        .map(|j| {
            let col: Vec<f64> = x.column(j).collect();
            let mean = stats::mean(&col);
            let std = stats::sample_std(&col, mean);
            ColumnStats {
                mean,
                std,
                dropped: !(std >= eps),
            }
        })
        .collect();
    let kept: Vec<usize> = (0..x.cols()).filter(|&j| !stats[j].dropped).collect();
    let mut data = Vec::with_capacity(n * kept.len());
    for row in x.iter_rows() {
        for &j in &kept {
            data.push((row[j] - stats[j].mean) / stats[j].std);
        }
    }
    Ok(Standardized {
        points: Matrix::new(n, kept.len(), data),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_column() {
        let z = standardize(&Matrix::from_rows(&[[1.0], [2.0], [3.0]]), 1e-12).unwrap();
        assert_eq!(z.points.column(0).collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(z.stats[0].mean, 2.0);
        assert_eq!(z.stats[0].std, 1.0);
    }

    #[test]
    fn constant_column_is_dropped() {
        let z = standardize(&Matrix::from_rows(&[[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]), 1e-12).unwrap();
        assert!(z.stats[0].dropped);
        assert!(!z.stats[1].dropped);
        assert_eq!(z.points.cols(), 1);
    }

    #[test]
    fn standardized_input_is_a_fixed_point() {
        let x = Matrix::from_rows(&[[0.3], [-1.2], [2.5], [0.1], [-0.7]]);
        let once = standardize(&x, 1e-12).unwrap().points;
        let twice = standardize(&once, 1e-12).unwrap().points;
        for (a, b) in once.column(0).zip(twice.column(0)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_row_is_rejected() {
        assert_eq!(
            standardize(&Matrix::from_rows(&[[1.0]]), 1e-12),
            Err(FucodError::TooFewSamples { need: 2, got: 1 })
        );
    }
}
