//! Small descriptive statistics shared by the detectors and summaries.

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (N-1 divisor).
pub fn sample_std(xs: &[f64], mean: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Median; mean of the two middle elements for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median and median absolute deviation.
pub fn median_mad(xs: &[f64]) -> (f64, f64) {
    let med = median(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - med).abs()).collect();
    (med, median(&dev))
}

/// Robust exceedance score in [0, 1]: how far `x` sits above the median in
/// units of `mult` MADs.
///
/// Differences within a few ulps of the operands are treated as zero, so a
/// spread that only exists through rounding (two points equidistant from
/// their centroid, say) neither scores nor divides.
pub fn robust_score(x: f64, median: f64, mad: f64, mult: f64, eps: f64) -> f64 {
    let noise = ROUNDOFF_ULPS * f64::EPSILON * x.abs().max(median.abs());
    let excess = x - median;
    if excess <= noise {
        return 0.0;
    }
    let spread = if mad <= noise { 0.0 } else { mad };
    (excess / (mult * spread + eps)).clamp(0.0, 1.0)
}

const ROUNDOFF_ULPS: f64 = 64.0;
