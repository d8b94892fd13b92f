//! Quality data generation: plausibility values and outlier levels for a
//! coil, bundled into a [`QualityRecord`].

use std::collections::BTreeMap;

use thiserror::Error;

use crate::config::RunConfig;
use crate::fucod::{fucod_run, FucodError, FucodOutput};
use crate::ingest::feature_matrix;
use crate::model::{
    ChannelSeries, ChannelSummary, CoilRecord, PlausibilityValue, QualityRecord, RecordSummary,
    CHANNELS,
};
use crate::plausibility::{eval_assessment, pv_summary, PlausibilityError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QgsError {
    #[error("outlier detection: {0}")]
    Fucod(#[from] FucodError),
    #[error("plausibility of {channel}: {source}")]
    Plausibility {
        channel: String,
        source: PlausibilityError,
    },
}

/// Runs the outlier detector and every channel assessment on a coil.
///
/// Data-driven leaves receive `1 - outlier level` per sample. The combined
/// plausibility of a sample is the minimum over its channels.
pub fn run_qgs(coil: &CoilRecord, config: &RunConfig) -> Result<QualityRecord, QgsError> {
    let out = fucod_run(&feature_matrix(coil), &config.fucod)?;
    build_record(coil, config, out)
}

pub(crate) fn build_record(
    coil: &CoilRecord,
    config: &RunConfig,
    out: FucodOutput,
) -> Result<QualityRecord, QgsError> {
    let n = coil.len();
    let external: Vec<PlausibilityValue> = out.levels.iter().map(|l| l.as_plausibility()).collect();

    let mut channels = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    let mut combined = vec![PlausibilityValue::ONE; n];
    for name in CHANNELS {
        let tree = config.assessment_for(name);
        let pv = eval_assessment(&tree, coil, Some(&external)).map_err(|source| {
            QgsError::Plausibility {
                channel: name.to_string(),
                source,
            }
        })?;
        let values = coil.channel(name).expect("standard channel");
        for (c, p) in combined.iter_mut().zip(&pv) {
            if p < c {
                *c = *p;
            }
        }
        let s = pv_summary(&pv).expect("coil is non-empty");
        summaries.insert(
            name.to_string(),
            ChannelSummary {
                mean: values.iter().sum::<f64>() / n as f64,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                pv_min: s.pv_min,
                pv_mean: s.pv_mean,
            },
        );
        channels.insert(name.to_string(), ChannelSeries { values, pv });
    }

    let outlier_count = out
        .levels
        .iter()
        .filter(|l| l.get() >= config.outlier_threshold)
        .count();
    Ok(QualityRecord {
        coil_id: coil.coil_id().to_string(),
        positions_m: coil.positions_m().to_vec(),
        channels,
        combined_pv: combined,
        outlier_levels: out.levels,
        detector_scores: out.scores,
        outlier_threshold: config.outlier_threshold,
        summary: RecordSummary {
            channels: summaries,
            outlier_count,
            outlier_fraction: outlier_count as f64 / n as f64,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_coil, Anomaly, SynthParams};
    use crate::plausibility::{AssessmentNode, MeasureSpec};

    fn params() -> SynthParams {
        SynthParams {
            seed: 5,
            n_samples: 400,
            width: 4,
            anomalies: vec![Anomaly::stuck("p2", 100, 30), Anomaly::spike("p1", 300, 12.0)],
            ..SynthParams::default()
        }
    }

    #[test]
    fn record_is_consistent() {
        let (coil, _) = synth_coil(&params()).unwrap();
        let rec = run_qgs(&coil, &RunConfig::default()).unwrap();
        rec.validate().unwrap();
        assert_eq!(rec.len(), 400);
        assert_eq!(rec.channels.len(), 4);
        for j in 0..rec.len() {
            let min = rec.channels.values().map(|c| c.pv[j]).fold(PlausibilityValue::ONE, |a, b| if b < a { b } else { a });
            assert_eq!(rec.combined_pv[j], min);
        }
    }

    #[test]
    fn stuck_run_has_zero_plausibility() {
        let (coil, _) = synth_coil(&params()).unwrap();
        let rec = run_qgs(&coil, &RunConfig::default()).unwrap();
        let pv = &rec.channels["p2"].pv;
        assert!(pv[104..130].iter().all(|p| p.get() == 0.0));
        assert!(pv[100..104].iter().all(|p| p.get() > 0.0));
    }

    #[test]
    fn spike_lowers_plausibility_through_detector() {
        let (coil, _) = synth_coil(&params()).unwrap();
        let rec = run_qgs(&coil, &RunConfig::default()).unwrap();
        assert!(rec.outlier_levels[300].get() >= 0.5);
        assert!(rec.channels["p1"].pv[300].get() <= 0.5);
    }

    #[test]
    fn configured_tree_replaces_default() {
        let (coil, _) = synth_coil(&params()).unwrap();
        let mut cfg = RunConfig::default();
        cfg.assessment.insert(
            "p3".into(),
            AssessmentNode::leaf("p3", MeasureSpec::Threshold { t_min: -1e9, t_max: 1e9 }),
        );
        let rec = run_qgs(&coil, &cfg).unwrap();
        assert!(rec.channels["p3"].pv.iter().all(|p| p.get() == 1.0));
    }
}
