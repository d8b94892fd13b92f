//! Distribution-based detector: two-sided Grubbs statistic per sample.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{FucodError, Standardized};

/// Two-sided Grubbs critical value for `n` samples at significance `alpha`.
///
/// `G = (n-1)/sqrt(n) * sqrt(t^2 / (n-2+t^2))` with `t` the upper
/// `alpha/(2n)` quantile of Student's t with `n-2` degrees of freedom.
pub fn grubbs_critical(n: usize, alpha: f64) -> Result<f64, FucodError> {
    if n < 3 {
        return Err(FucodError::TooFewSamples { need: 3, got: n });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FucodError::InvalidConfig(format!("alpha = {alpha}")));
    }
    let nf = n as f64;
    let df = nf - 2.0;
    let t_dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    let t = t_dist.inverse_cdf(1.0 - alpha / (2.0 * nf));
    let t2 = t * t;
    Ok((nf - 1.0) / nf.sqrt() * (t2 / (df + t2)).sqrt())
}

/// Largest absolute z-score of each sample across the retained dimensions,
/// relative to the Grubbs critical value and capped at 1.
///
/// Dropped dimensions contribute nothing; with every dimension dropped all
/// scores are 0.
pub fn grubbs_scores(z: &Standardized, alpha: f64) -> Result<Vec<f64>, FucodError> {
    let n = z.points.rows();
    let crit = grubbs_critical(n, alpha)?;
    Ok(z.points
        .iter_rows()
        .map(|row| {
            let stat = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (stat / crit).min(1.0)
        })
        .collect())
}
