//! Quality exchange between supplier and customer.
//!
//! Documents travel as canonical JSON inside `Q4X1` frames, one request
//! and one response per TCP connection.

mod client;
mod frame;
mod server;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{FeedbackReport, QualityCertificate, CERT_SCHEMA_VERSION};

pub use client::{send_certificate, send_feedback, ClientError, DEFAULT_TIMEOUT};
pub use frame::{frame, read_frame, unframe, write_frame, FrameError, MsgType, WireMessage, MAGIC, MAX_PAYLOAD};
pub use server::{AuditLog, Handler, OrderBook, Server, ServerHandle, ServeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocError {
    #[error("MALFORMED_DOCUMENT: {0}")]
    Malformed(String),
    #[error("UNSUPPORTED_SCHEMA_VERSION: {0:?}")]
    UnsupportedSchemaVersion(String),
    #[error("MISSING_FIELD: {0}")]
    MissingField(String),
}

/// Serializes with object keys sorted and no whitespace. Numbers use the
/// shortest representation that parses back to the same `f64`.
pub fn encode_canonical<T: Serialize>(doc: &T) -> Vec<u8> {
    // serde_json's map is ordered by key, so going through a Value sorts
    // every object regardless of struct field order.
    let value = serde_json::to_value(doc).expect("document types serialize to JSON");
    serde_json::to_vec(&value).expect("JSON values serialize")
}

pub fn encode_certificate(cert: &QualityCertificate) -> Vec<u8> {
    encode_canonical(cert)
}

pub fn encode_feedback(report: &FeedbackReport) -> Vec<u8> {
    encode_canonical(report)
}

fn parse_object(bytes: &[u8]) -> Result<serde_json::Map<String, Value>, DocError> {
    match serde_json::from_slice::<Value>(bytes) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(DocError::Malformed("top level is not an object".into())),
        Err(e) => Err(DocError::Malformed(e.to_string())),
    }
}

fn require(map: &serde_json::Map<String, Value>, fields: &[&str]) -> Result<(), DocError> {
    match fields.iter().find(|f| !map.contains_key(**f)) {
        Some(f) => Err(DocError::MissingField((*f).to_string())),
        None => Ok(()),
    }
}

fn from_map<T: DeserializeOwned>(map: serde_json::Map<String, Value>) -> Result<T, DocError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| DocError::Malformed(e.to_string()))
}

/// Members every intimacy level carries besides the schema version.
const CERT_FIELDS: [&str; 7] = [
    "certificate_id",
    "coil_id",
    "order_id",
    "customer_id",
    "intimacy",
    "verdict",
    "generated_at",
];

/// Parses any JSON rendering of a `q4-cert/1` certificate.
pub fn decode_certificate(bytes: &[u8]) -> Result<QualityCertificate, DocError> {
    let map = parse_object(bytes)?;
    require(&map, &["schema_version"])?;
    match &map["schema_version"] {
        Value::String(v) if v == CERT_SCHEMA_VERSION => {}
        Value::String(v) => return Err(DocError::UnsupportedSchemaVersion(v.clone())),
        other => return Err(DocError::UnsupportedSchemaVersion(other.to_string())),
    }
    require(&map, &CERT_FIELDS)?;
    let cert: QualityCertificate = from_map(map)?;
    cert.validate().map_err(|e| DocError::Malformed(e.to_string()))?;
    Ok(cert)
}

pub fn decode_feedback(bytes: &[u8]) -> Result<FeedbackReport, DocError> {
    let map = parse_object(bytes)?;
    require(&map, &["certificate_id", "coil_id", "items"])?;
    let report: FeedbackReport = from_map(map)?;
    if !report.is_well_formed() {
        return Err(DocError::Malformed("invalid identifier or non-finite number".into()));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AckStatus {
    Accepted,
    Malformed,
    UnknownOrder,
}

impl std::fmt::Display for AckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AckStatus::Accepted => "ACCEPTED",
            AckStatus::Malformed => "MALFORMED",
            AckStatus::UnknownOrder => "UNKNOWN_ORDER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ack {
    /// Echo of the request's certificate id; empty if it could not be read.
    pub certificate_id: String,
    pub status: AckStatus,
}

pub fn decode_ack(bytes: &[u8]) -> Result<Ack, DocError> {
    let map = parse_object(bytes)?;
    require(&map, &["certificate_id", "status"])?;
    from_map(map)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{ChannelPayload, Intimacy, OutlierSummary, Timestamp, Verdict};
    use std::collections::BTreeMap;

    pub(crate) fn sample_cert(intimacy: Intimacy) -> QualityCertificate {
        let full = intimacy == Intimacy::Full;
        let detail = intimacy != Intimacy::Basic;
        let block = ChannelPayload {
            mean: 100.25,
            min: 97.0,
            max: 0.1 + 0.2 + 103.0,
            pv_min: 0.0,
            pv_mean: 0.987654321,
            values: full.then(|| vec![1e-7, 2.5, -3e21]),
            pv: full.then(|| vec![0.0, 1.0, 1.0 / 3.0]),
        };
        QualityCertificate {
            schema_version: CERT_SCHEMA_VERSION.into(),
            certificate_id: "O1.C1.20240102T030405Z".into(),
            coil_id: "C1".into(),
            order_id: "O1".into(),
            customer_id: "K1".into(),
            intimacy,
            verdict: Verdict::Accept,
            channels: detail.then(|| BTreeMap::from([("p1".to_string(), block)])),
            outlier_summary: detail.then(|| OutlierSummary {
                count: 2,
                fraction: 0.0002,
                positions: full.then(|| vec![12.3, 456.7]),
            }),
            generated_at: Timestamp::from_unix(1_704_164_645).unwrap(),
        }
    }

    #[test]
    fn round_trip_and_idempotence() {
        for i in Intimacy::ALL {
            let c = sample_cert(i);
            let bytes = encode_certificate(&c);
            let back = decode_certificate(&bytes).unwrap();
            assert_eq!(back, c);
            assert_eq!(encode_certificate(&back), bytes);
        }
    }

    #[test]
    fn keys_are_sorted_without_whitespace() {
        let text = String::from_utf8(encode_certificate(&sample_cert(Intimacy::Basic))).unwrap();
        assert_eq!(
            text,
            r#"{"certificate_id":"O1.C1.20240102T030405Z","coil_id":"C1","customer_id":"K1","generated_at":"2024-01-02T03:04:05Z","intimacy":"BASIC","order_id":"O1","schema_version":"q4-cert/1","verdict":"ACCEPT"}"#
        );
    }

    #[test]
    fn non_canonical_input_decodes() {
        let text = r#" { "verdict" : "REJECT", "schema_version":"q4-cert/1","intimacy":"BASIC",
            "order_id":"O1","coil_id":"C1","customer_id":"K1","certificate_id":"X",
            "generated_at":"2024-01-02T03:04:05+00:00" } "#;
        let c = decode_certificate(text.as_bytes()).unwrap();
        assert_eq!(c.verdict, Verdict::Reject);
    }

    #[test]
    fn decode_errors() {
        let good = String::from_utf8(encode_certificate(&sample_cert(Intimacy::Standard))).unwrap();
        let v2 = good.replace("q4-cert/1", "q4-cert/2");
        assert_eq!(
            decode_certificate(v2.as_bytes()),
            Err(DocError::UnsupportedSchemaVersion("q4-cert/2".into()))
        );
        assert!(matches!(
            decode_certificate(&good.as_bytes()[..good.len() / 2]),
            Err(DocError::Malformed(_))
        ));
        let no_verdict = good.replace(r#","verdict":"ACCEPT""#, "");
        assert_eq!(
            decode_certificate(no_verdict.as_bytes()),
            Err(DocError::MissingField("verdict".into()))
        );
        assert_eq!(
            decode_certificate(br#"{"coil_id":"C1"}"#),
            Err(DocError::MissingField("schema_version".into()))
        );
        assert!(matches!(decode_certificate(b"[1,2]"), Err(DocError::Malformed(_))));
        assert!(matches!(decode_certificate(&[0xff, 0xfe]), Err(DocError::Malformed(_))));
    }

    #[test]
    fn intimacy_mismatch_is_malformed() {
        let mut c = sample_cert(Intimacy::Full);
        c.intimacy = Intimacy::Basic;
        assert!(matches!(
            decode_certificate(&encode_certificate(&c)),
            Err(DocError::Malformed(_))
        ));
    }

    #[test]
    fn ack_encoding() {
        let ack = Ack {
            certificate_id: "X".into(),
            status: AckStatus::UnknownOrder,
        };
        let bytes = encode_canonical(&ack);
        assert_eq!(bytes, br#"{"certificate_id":"X","status":"UNKNOWN_ORDER"}"#);
        assert_eq!(decode_ack(&bytes).unwrap(), ack);
    }
}
