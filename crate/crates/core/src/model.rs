//! Domain types shared by every stage of the pipeline.
//!
//! Types that carry data from outside (coil files, documents received over
//! the wire) have a `validate` step; everything downstream assumes it ran.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Per-sample channels derived from a coil. `p4` is the width-averaged
/// surface map.
pub const CHANNELS: [&str; 4] = ["p1", "p2", "p3", "p4"];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{what} = {value} is outside [0, 1]")]
pub struct RangeError {
    pub what: &'static str,
    pub value: f64,
}

fn unit_interval(what: &'static str, value: f64) -> Result<f64, RangeError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(RangeError { what, value })
    }
}

/// Confidence in a measured value: 0 is not plausible, 1 is fully reliable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct PlausibilityValue(f64);

impl PlausibilityValue {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);

    pub fn new(value: f64) -> Result<Self, RangeError> {
        unit_interval("plausibility value", value).map(Self)
    }

    /// Clamp into range. Only for values that are in [0, 1] up to rounding.
    pub(crate) fn saturating(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Self(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for PlausibilityValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Self::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Fused outlier risk of one sample.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct OutlierLevel(f64);

impl OutlierLevel {
    pub fn new(value: f64) -> Result<Self, RangeError> {
        unit_interval("outlier level", value).map(Self)
    }

    pub(crate) fn saturating(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Plausibility of a sample as seen by the outlier detector.
    pub fn as_plausibility(self) -> PlausibilityValue {
        PlausibilityValue::saturating(1.0 - self.0)
    }
}

impl<'de> Deserialize<'de> for OutlierLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Self::new(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Coil

/// A coil as read from a file, before any checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCoil {
    pub coil_id: String,
    pub sample_step_m: f64,
    pub positions_m: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    /// One row per length position, one column per width position.
    pub p4: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    InvalidId(String),
    NonPositiveStep(f64),
    LengthMismatch {
        field: String,
        expected: usize,
        found: usize,
    },
    ZeroWidth,
    NonMonotonePositions { index: usize },
    NonFiniteValue { field: String, index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "EMPTY: coil has no samples"),
            Violation::InvalidId(id) => write!(f, "INVALID_ID: {id:?}"),
            Violation::NonPositiveStep(s) => write!(f, "NON_POSITIVE_STEP: sample_step_m = {s}"),
            Violation::LengthMismatch {
                field,
                expected,
                found,
            } => write!(f, "LENGTH_MISMATCH: {field} has {found} entries, expected {expected}"),
            Violation::ZeroWidth => write!(f, "LENGTH_MISMATCH: p4 has zero width"),
            Violation::NonMonotonePositions { index } => {
                write!(f, "NON_MONOTONE_POSITIONS at index {index}")
            }
            Violation::NonFiniteValue { field, index } => {
                write!(f, "NON_FINITE_VALUE in {field} at index {index}")
            }
        }
    }
}

/// Every problem found in a coil, in field order.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<Violation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Identifiers end up in file headers, CSV cells and audit log lines.
pub(crate) fn valid_identifier(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| !c.is_whitespace() && !c.is_control() && c != ',' && c != '=')
}

/// A validated coil: three length channels and a surface map, all aligned
/// to strictly increasing positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilRecord {
    coil_id: String,
    sample_step_m: f64,
    positions_m: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    p3: Vec<f64>,
    width: usize,
    p4: Vec<f64>,
}

pub fn validate_coil(raw: RawCoil) -> Result<CoilRecord, ValidationErrors> {
    CoilRecord::validate(raw)
}

impl CoilRecord {
    pub fn validate(raw: RawCoil) -> Result<Self, ValidationErrors> {
        let mut errs = Vec::new();
        if !valid_identifier(&raw.coil_id) {
            errs.push(Violation::InvalidId(raw.coil_id.clone()));
        }
        if !(raw.sample_step_m.is_finite() && raw.sample_step_m > 0.0) {
            errs.push(Violation::NonPositiveStep(raw.sample_step_m));
        }
        let n = raw.positions_m.len();
        if n == 0 {
            errs.push(Violation::Empty);
        }
        for (name, len) in [
            ("p1", raw.p1.len()),
            ("p2", raw.p2.len()),
            ("p3", raw.p3.len()),
            ("p4", raw.p4.len()),
        ] {
            if len != n {
                errs.push(Violation::LengthMismatch {
                    field: name.to_string(),
                    expected: n,
                    found: len,
                });
            }
        }
        let width = raw.p4.first().map_or(0, Vec::len);
        if !raw.p4.is_empty() && width == 0 {
            errs.push(Violation::ZeroWidth);
        }
        for (row, cells) in raw.p4.iter().enumerate().skip(1) {
            if cells.len() != width {
                errs.push(Violation::LengthMismatch {
                    field: format!("p4 row {row}"),
                    expected: width,
                    found: cells.len(),
                });
            }
        }
        for (i, pair) in raw.positions_m.windows(2).enumerate() {
            if pair[1].partial_cmp(&pair[0]) != Some(std::cmp::Ordering::Greater)
                && pair.iter().all(|v| v.is_finite())
            {
                errs.push(Violation::NonMonotonePositions { index: i + 1 });
            }
        }
        for (name, series) in [
            ("pos_m", &raw.positions_m),
            ("p1", &raw.p1),
            ("p2", &raw.p2),
            ("p3", &raw.p3),
        ] {
            for (index, v) in series.iter().enumerate() {
                if !v.is_finite() {
                    errs.push(Violation::NonFiniteValue {
                        field: name.to_string(),
                        index,
                    });
                }
            }
        }
        for (index, cells) in raw.p4.iter().enumerate() {
            for (col, v) in cells.iter().enumerate() {
                if !v.is_finite() {
                    errs.push(Violation::NonFiniteValue {
                        field: format!("p4_{col:04}"),
                        index,
                    });
                }
            }
        }
        if !errs.is_empty() {
            return Err(ValidationErrors(errs));
        }
        Ok(Self {
            coil_id: raw.coil_id,
            sample_step_m: raw.sample_step_m,
            positions_m: raw.positions_m,
            p1: raw.p1,
            p2: raw.p2,
            p3: raw.p3,
            width,
            p4: raw.p4.into_iter().flatten().collect(),
        })
    }

    pub fn into_raw(self) -> RawCoil {
        let p4 = self.p4.chunks(self.width).map(<[f64]>::to_vec).collect();
        RawCoil {
            coil_id: self.coil_id,
            sample_step_m: self.sample_step_m,
            positions_m: self.positions_m,
            p1: self.p1,
            p2: self.p2,
            p3: self.p3,
            p4,
        }
    }

    pub fn coil_id(&self) -> &str {
        &self.coil_id
    }

    pub fn sample_step_m(&self) -> f64 {
        self.sample_step_m
    }

    pub fn positions_m(&self) -> &[f64] {
        &self.positions_m
    }

    pub fn len(&self) -> usize {
        self.positions_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_m.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn p2(&self) -> &[f64] {
        &self.p2
    }

    pub fn p3(&self) -> &[f64] {
        &self.p3
    }

    pub fn p4_row(&self, row: usize) -> &[f64] {
        &self.p4[row * self.width..(row + 1) * self.width]
    }

    pub fn p4_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.p4.chunks(self.width)
    }

    /// Width-averaged surface map, one value per length position.
    pub fn p4_mean(&self) -> Vec<f64> {
        self.p4_rows()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect()
    }

    /// Per-sample series of a named channel.
    pub fn channel(&self, name: &str) -> Option<Vec<f64>> {
        match name {
            "p1" => Some(self.p1.clone()),
            "p2" => Some(self.p2.clone()),
            "p3" => Some(self.p3.clone()),
            "p4" => Some(self.p4_mean()),
            _ => None,
        }
    }
}

/// The 4-D observations fed to the outlier detector: p1, p2, p3 and the
/// width-averaged p4.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<[f64; 4]>,
}

impl FeatureMatrix {
    pub const DIM: usize = 4;

    pub fn new(rows: Vec<[f64; 4]>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Quality record

/// Normalised outputs of the four detectors for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorScores {
    /// Distribution-based (Grubbs).
    pub g: f64,
    /// Distance to nearest neighbours.
    pub d: f64,
    /// Distance to own cluster centroid.
    pub c: f64,
    /// Local outlier factor.
    pub l: f64,
}

impl DetectorScores {
    pub fn as_array(&self) -> [f64; 4] {
        [self.g, self.d, self.c, self.l]
    }

    pub fn in_range(&self) -> bool {
        self.as_array().iter().all(|v| (0.0..=1.0).contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSeries {
    pub values: Vec<f64>,
    pub pv: Vec<PlausibilityValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub pv_min: f64,
    pub pv_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub channels: BTreeMap<String, ChannelSummary>,
    pub outlier_count: usize,
    pub outlier_fraction: f64,
}

/// Output of the generation stage for one coil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityRecord {
    pub coil_id: String,
    pub positions_m: Vec<f64>,
    pub channels: BTreeMap<String, ChannelSeries>,
    pub combined_pv: Vec<PlausibilityValue>,
    pub outlier_levels: Vec<OutlierLevel>,
    pub detector_scores: Vec<DetectorScores>,
    /// Level at or above which a sample counts as an outlier in `summary`.
    pub outlier_threshold: f64,
    pub summary: RecordSummary,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("series {0} has the wrong length")]
    Length(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("summary inconsistent: {0}")]
    Summary(String),
    #[error("detector score outside [0, 1] at sample {0}")]
    Score(usize),
}

impl QualityRecord {
    pub fn len(&self) -> usize {
        self.positions_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_m.is_empty()
    }

    /// Samples whose level reaches the record's outlier threshold.
    pub fn outlier_indices(&self, threshold: f64) -> Vec<usize> {
        self.outlier_levels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.get() >= threshold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Checks a record loaded from a document.
    pub fn validate(&self) -> Result<(), RecordError> {
        let n = self.len();
        if n == 0 {
            return Err(RecordError::Length("positions_m".into()));
        }
        if !self.positions_m.iter().all(|p| p.is_finite()) {
            return Err(RecordError::NonFinite("positions_m".into()));
        }
        for (name, series) in &self.channels {
            if series.values.len() != n || series.pv.len() != n {
                return Err(RecordError::Length(name.clone()));
            }
            if !series.values.iter().all(|v| v.is_finite()) {
                return Err(RecordError::NonFinite(name.clone()));
            }
        }
        if self.combined_pv.len() != n {
            return Err(RecordError::Length("combined_pv".into()));
        }
        if self.outlier_levels.len() != n {
            return Err(RecordError::Length("outlier_levels".into()));
        }
        if self.detector_scores.len() != n {
            return Err(RecordError::Length("detector_scores".into()));
        }
        if let Some(i) = self.detector_scores.iter().position(|s| !s.in_range()) {
            return Err(RecordError::Score(i));
        }
        let count = self.outlier_indices(self.outlier_threshold).len();
        if count != self.summary.outlier_count {
            return Err(RecordError::Summary("outlier_count".into()));
        }
        if self.summary.outlier_fraction != count as f64 / n as f64 {
            return Err(RecordError::Summary("outlier_fraction".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Orders and customers

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn default_outlier_threshold() -> f64 {
    0.5
}

/// Conditions under which a coil fits an order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSpec {
    pub order_id: String,
    pub customer_id: String,
    /// Constrained channels and their tolerance bands.
    pub tolerances: BTreeMap<String, Band>,
    /// Samples below this plausibility are not trusted for tolerance checks.
    pub pv_threshold: f64,
    /// Minimum in-tolerance fraction among trusted samples.
    pub coverage_req: f64,
    /// Minimum fraction of trusted samples per constrained channel.
    pub data_sufficiency: f64,
    pub max_outlier_frac: f64,
    #[serde(default = "default_outlier_threshold")]
    pub outlier_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderError {
    #[error("invalid identifier {0:?}")]
    InvalidId(String),
    #[error("band for {channel} has lo > hi or non-finite bounds")]
    Band { channel: String },
    #[error(transparent)]
    Range(#[from] RangeError),
}

impl OrderSpec {
    pub fn validate(&self) -> Result<(), OrderError> {
        for id in [&self.order_id, &self.customer_id] {
            if !valid_identifier(id) {
                return Err(OrderError::InvalidId(id.clone()));
            }
        }
        for (channel, band) in &self.tolerances {
            if !(band.lo.is_finite() && band.hi.is_finite() && band.lo <= band.hi) {
                return Err(OrderError::Band {
                    channel: channel.clone(),
                });
            }
        }
        unit_interval("pv_threshold", self.pv_threshold)?;
        unit_interval("coverage_req", self.coverage_req)?;
        unit_interval("data_sufficiency", self.data_sufficiency)?;
        unit_interval("max_outlier_frac", self.max_outlier_frac)?;
        unit_interval("outlier_threshold", self.outlier_threshold)?;
        Ok(())
    }
}

/// How much quality detail a customer receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Intimacy {
    Basic,
    Standard,
    Full,
}

impl Intimacy {
    pub const ALL: [Intimacy; 3] = [Intimacy::Basic, Intimacy::Standard, Intimacy::Full];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomerProfile {
    pub customer_id: String,
    pub intimacy: Intimacy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Accept,
    Reject,
    InsufficientData,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "ACCEPT",
            Verdict::Reject => "REJECT",
            Verdict::InsufficientData => "INSUFFICIENT_DATA",
        })
    }
}

/// One violated allocation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reason {
    pub channel: String,
    pub rule: String,
    pub measured: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationDecision {
    pub coil_id: String,
    pub order_id: String,
    pub verdict: Verdict,
    pub reasons: Vec<Reason>,
}

impl AllocationDecision {
    /// ACCEPT carries no reasons, the other verdicts at least one.
    pub fn is_consistent(&self) -> bool {
        match self.verdict {
            Verdict::Accept => self.reasons.is_empty(),
            _ => !self.reasons.is_empty(),
        }
    }
}

// ---------------------------------------------------------------------------
// Exchanged documents

pub const CERT_SCHEMA_VERSION: &str = "q4-cert/1";

/// A UTC instant with whole-second resolution, rendered as
/// `YYYY-MM-DDTHH:MM:SSZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    pub fn now() -> Self {
        Self::from_unix(Utc::now().timestamp()).expect("current time is representable")
    }

    pub fn from_unix(secs: i64) -> Option<Self> {
        Utc.timestamp_opt(secs, 0).single().map(Self)
    }

    pub fn unix(&self) -> i64 {
        self.0.timestamp()
    }

    /// Compact form used inside identifiers.
    pub fn compact(&self) -> String {
        self.0.format("%Y%m%dT%H%M%SZ").to_string()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

impl std::str::FromStr for Timestamp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = DateTime::parse_from_rfc3339(s).map_err(|e| format!("{s:?}: {e}"))?;
        if t.timestamp_subsec_nanos() != 0 {
            return Err(format!("{s:?}: timestamps carry whole seconds only"));
        }
        Ok(Self(t.with_timezone(&Utc)))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Per-channel certificate block. Aggregates from STANDARD up, sample
/// arrays only at FULL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPayload {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub pv_min: f64,
    pub pv_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierSummary {
    pub count: usize,
    pub fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityCertificate {
    pub schema_version: String,
    pub certificate_id: String,
    pub coil_id: String,
    pub order_id: String,
    pub customer_id: String,
    pub intimacy: Intimacy,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<BTreeMap<String, ChannelPayload>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier_summary: Option<OutlierSummary>,
    pub generated_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("unsupported schema version {0:?}")]
    SchemaVersion(String),
    #[error("invalid identifier {0:?}")]
    InvalidId(String),
    #[error("payload detail does not match intimacy {0:?}: {1}")]
    Detail(Intimacy, &'static str),
    #[error("non-finite or out-of-range number in {0}")]
    Number(String),
}

impl QualityCertificate {
    pub fn validate(&self) -> Result<(), CertificateError> {
        if self.schema_version != CERT_SCHEMA_VERSION {
            return Err(CertificateError::SchemaVersion(self.schema_version.clone()));
        }
        for id in [
            &self.certificate_id,
            &self.coil_id,
            &self.order_id,
            &self.customer_id,
        ] {
            if !valid_identifier(id) {
                return Err(CertificateError::InvalidId(id.clone()));
            }
        }
        let detail = |m| Err(CertificateError::Detail(self.intimacy, m));
        match self.intimacy {
            Intimacy::Basic => {
                if self.channels.is_some() || self.outlier_summary.is_some() {
                    return detail("BASIC carries the verdict only");
                }
            }
            Intimacy::Standard | Intimacy::Full => {
                let full = self.intimacy == Intimacy::Full;
                let (Some(channels), Some(outliers)) = (&self.channels, &self.outlier_summary)
                else {
                    return detail("channel aggregates and outlier summary are required");
                };
                if outliers.positions.is_some() != full {
                    return detail("outlier positions are present exactly at FULL");
                }
                for (name, block) in channels {
                    if block.values.is_some() != full || block.pv.is_some() != full {
                        return detail("sample arrays are present exactly at FULL");
                    }
                    let scalars = [block.mean, block.min, block.max, block.pv_min, block.pv_mean];
                    let arrays = block.values.iter().chain(block.pv.iter()).flatten();
                    if !scalars.iter().chain(arrays).all(|v| v.is_finite())
                        || !(0.0..=1.0).contains(&block.pv_min)
                        || !(0.0..=1.0).contains(&block.pv_mean)
                        || block.pv.iter().flatten().any(|v| !(0.0..=1.0).contains(v))
                    {
                        return Err(CertificateError::Number(name.clone()));
                    }
                }
                if !(0.0..=1.0).contains(&outliers.fraction)
                    || outliers.positions.iter().flatten().any(|p| !p.is_finite())
                {
                    return Err(CertificateError::Number("outlier_summary".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeedbackKind {
    OutOfTolerance,
    LowPlausibility,
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackItem {
    /// Channel name, or `*` for whole-sample outliers.
    pub channel: String,
    pub position_m: f64,
    pub kind: FeedbackKind,
    pub value: f64,
}

/// Findings sent back to the supplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackReport {
    pub certificate_id: String,
    pub coil_id: String,
    pub items: Vec<FeedbackItem>,
}

impl FeedbackReport {
    /// Every item position lies within `[start, end]`.
    pub fn within_extent(&self, start: f64, end: f64) -> bool {
        self.items
            .iter()
            .all(|i| start <= i.position_m && i.position_m <= end)
    }

    pub fn is_well_formed(&self) -> bool {
        valid_identifier(&self.certificate_id)
            && valid_identifier(&self.coil_id)
            && self
                .items
                .iter()
                .all(|i| i.position_m.is_finite() && i.value.is_finite())
    }
}
