//! Quality allocation: does a coil fit an order, what does the customer
//! see, and what goes back to the supplier.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::model::{
    AllocationDecision, ChannelPayload, CustomerProfile, FeedbackItem, FeedbackKind,
    FeedbackReport, Intimacy, OrderSpec, OutlierSummary, QualityCertificate, QualityRecord,
    Reason, Timestamp, Verdict, CERT_SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasError {
    #[error("CHANNEL_MISMATCH: order constrains {0:?}, which the record does not have")]
    ChannelMismatch(String),
}

pub const RULE_SUFFICIENCY: &str = "data_sufficiency";
pub const RULE_COVERAGE: &str = "coverage";
pub const RULE_OUTLIERS: &str = "max_outlier_frac";
/// Channel name used for whole-sample findings.
pub const ALL_CHANNELS: &str = "*";

fn outlier_fraction(record: &QualityRecord, threshold: f64) -> f64 {
    record.outlier_indices(threshold).len() as f64 / record.len() as f64
}

/// Decides whether a coil can be allocated to an order.
///
/// Only samples whose plausibility reaches `pv_threshold` are trusted. The
/// verdict is INSUFFICIENT_DATA when any constrained channel has too few
/// trusted samples, otherwise REJECT when any channel's in-tolerance
/// fraction among its trusted samples falls short of `coverage_req` or the
/// outlier fraction exceeds `max_outlier_frac`, otherwise ACCEPT. Every
/// violated rule of the deciding stage is listed.
pub fn allocate(record: &QualityRecord, order: &OrderSpec) -> Result<AllocationDecision, QasError> {
    let n = record.len() as f64;
    let mut insufficient = Vec::new();
    let mut coverage = Vec::new();
    for (name, band) in &order.tolerances {
        let series = record
            .channels
            .get(name)
            .ok_or_else(|| QasError::ChannelMismatch(name.clone()))?;
        let trusted: Vec<f64> = series
            .values
            .iter()
            .zip(&series.pv)
            .filter(|(_, pv)| pv.get() >= order.pv_threshold)
            .map(|(v, _)| *v)
            .collect();
        let sufficiency = trusted.len() as f64 / n;
        if sufficiency < order.data_sufficiency {
            insufficient.push(Reason {
                channel: name.clone(),
                rule: RULE_SUFFICIENCY.into(),
                measured: sufficiency,
                limit: order.data_sufficiency,
            });
        }
        let in_band = if trusted.is_empty() {
            0.0
        } else {
            trusted.iter().filter(|v| band.contains(**v)).count() as f64 / trusted.len() as f64
        };
        if in_band < order.coverage_req {
            coverage.push(Reason {
                channel: name.clone(),
                rule: RULE_COVERAGE.into(),
                measured: in_band,
                limit: order.coverage_req,
            });
        }
    }

    let (verdict, reasons) = if !insufficient.is_empty() {
        (Verdict::InsufficientData, insufficient)
    } else {
        let frac = outlier_fraction(record, order.outlier_threshold);
        if frac > order.max_outlier_frac {
            coverage.push(Reason {
                channel: ALL_CHANNELS.into(),
                rule: RULE_OUTLIERS.into(),
                measured: frac,
                limit: order.max_outlier_frac,
            });
        }
        if coverage.is_empty() {
            (Verdict::Accept, coverage)
        } else {
            (Verdict::Reject, coverage)
        }
    };
    Ok(AllocationDecision {
        coil_id: record.coil_id.clone(),
        order_id: order.order_id.clone(),
        verdict,
        reasons,
    })
}

/// What a customer of a given intimacy level receives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificatePayload {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels: Option<BTreeMap<String, ChannelPayload>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier_summary: Option<OutlierSummary>,
}

/// BASIC gets the verdict, STANDARD adds per-channel aggregates and the
/// outlier count, FULL adds the sample arrays and outlier positions.
pub fn select_payload(
    record: &QualityRecord,
    decision: &AllocationDecision,
    profile: &CustomerProfile,
) -> CertificatePayload {
    let verdict = decision.verdict;
    if profile.intimacy == Intimacy::Basic {
        return CertificatePayload {
            verdict,
            channels: None,
            outlier_summary: None,
        };
    }
    let full = profile.intimacy == Intimacy::Full;
    let channels = record
        .summary
        .channels
        .iter()
        .map(|(name, s)| {
            let series = record.channels.get(name);
            let block = ChannelPayload {
                mean: s.mean,
                min: s.min,
                max: s.max,
                pv_min: s.pv_min,
                pv_mean: s.pv_mean,
                values: series.filter(|_| full).map(|c| c.values.clone()),
                pv: series
                    .filter(|_| full)
                    .map(|c| c.pv.iter().map(|p| p.get()).collect()),
            };
            (name.clone(), block)
        })
        .collect();
    let positions = full.then(|| {
        record
            .outlier_indices(record.outlier_threshold)
            .into_iter()
            .map(|j| record.positions_m[j])
            .collect()
    });
    CertificatePayload {
        verdict,
        channels: Some(channels),
        outlier_summary: Some(OutlierSummary {
            count: record.summary.outlier_count,
            fraction: record.summary.outlier_fraction,
            positions,
        }),
    }
}

pub fn certificate_id(order_id: &str, coil_id: &str, at: Timestamp) -> String {
    format!("{order_id}.{coil_id}.{}", at.compact())
}

/// Assembles the certificate for one coil and order.
pub fn certify(
    record: &QualityRecord,
    decision: &AllocationDecision,
    profile: &CustomerProfile,
    generated_at: Timestamp,
) -> QualityCertificate {
    let payload = select_payload(record, decision, profile);
    QualityCertificate {
        schema_version: CERT_SCHEMA_VERSION.to_string(),
        certificate_id: certificate_id(&decision.order_id, &record.coil_id, generated_at),
        coil_id: record.coil_id.clone(),
        order_id: decision.order_id.clone(),
        customer_id: profile.customer_id.clone(),
        intimacy: profile.intimacy,
        verdict: payload.verdict,
        channels: payload.channels,
        outlier_summary: payload.outlier_summary,
        generated_at,
    }
}

/// Findings for the supplier, one item per offending sample and channel,
/// sorted by position and then channel.
///
/// For each constrained channel a sample below the plausibility threshold
/// yields LOW_PLAUSIBILITY (value: its plausibility) and is not checked
/// against the band; a trusted sample outside the band yields
/// OUT_OF_TOLERANCE (value: the measurement). Samples at or above the
/// order's outlier threshold add one OUTLIER item on channel `*` (value:
/// the level).
pub fn build_feedback(record: &QualityRecord, order: &OrderSpec, certificate_id: &str) -> FeedbackReport {
    let mut items = Vec::new();
    for j in 0..record.len() {
        let position_m = record.positions_m[j];
        let level = record.outlier_levels[j].get();
        if level >= order.outlier_threshold {
            items.push(FeedbackItem {
                channel: ALL_CHANNELS.into(),
                position_m,
                kind: FeedbackKind::Outlier,
                value: level,
            });
        }
        for (name, band) in &order.tolerances {
            let Some(series) = record.channels.get(name) else { continue };
            let pv = series.pv[j].get();
            let value = series.values[j];
            let item = if pv < order.pv_threshold {
                Some((FeedbackKind::LowPlausibility, pv))
            } else if !band.contains(value) {
                Some((FeedbackKind::OutOfTolerance, value))
            } else {
                None
            };
            if let Some((kind, value)) = item {
                items.push(FeedbackItem {
                    channel: name.clone(),
                    position_m,
                    kind,
                    value,
                });
            }
        }
    }
    items.sort_by(|a, b| {
        a.position_m
            .total_cmp(&b.position_m)
            .then_with(|| a.channel.cmp(&b.channel))
    });
    FeedbackReport {
        certificate_id: certificate_id.to_string(),
        coil_id: record.coil_id.clone(),
        items,
    }
}

/// Every key path of a JSON document, array elements collapsed to `[]`.
pub fn field_set(doc: &Value) -> BTreeSet<String> {
    fn walk(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let path = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    out.insert(path.clone());
                    walk(child, &path, out);
                }
            }
            Value::Array(items) => {
                for child in items {
                    walk(child, &format!("{prefix}[]"), out);
                }
            }
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    walk(doc, "", &mut out);
    out
}
