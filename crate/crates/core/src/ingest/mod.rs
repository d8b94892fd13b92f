//! Coil files, feature construction and synthetic coils.
//!
//! Coil CSV layout:
//!
//! ```text
//! # coil_id=C-0001 sample_step_m=0.1
//! pos_m,p1,p2,p3,p4_0000,p4_0001
//! 0,101.3,49.8,10.02,0.4,-0.1
//! ```
//!
//! Numbers are written in the shortest decimal form that parses back to
//! the same `f64`. Lines end in a single LF, including the last.

mod rng;
mod synth;

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{valid_identifier, CoilRecord, FeatureMatrix, RawCoil, ValidationErrors};

pub use rng::{Gaussian, SplitMix64};
pub use synth::{synth_coil, Anomaly, AnomalyKind, ChannelParams, Label, LabelSet, SynthParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("input is not UTF-8")]
    NotUtf8,
    #[error("BAD_HEADER: {0}")]
    BadHeader(String),
    #[error("BAD_ROW at line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error("invalid coil: {0}")]
    Invalid(#[from] ValidationErrors),
    #[error("INVALID_PARAMS: {0}")]
    InvalidParams(String),
}

fn parse_header_line(line: &str) -> Result<(String, f64), IngestError> {
    let bad = || IngestError::BadHeader(format!("expected `# coil_id=<id> sample_step_m=<decimal>`, got {line:?}"));
    let rest = line.strip_prefix("# coil_id=").ok_or_else(bad)?;
    let (id, step) = rest.split_once(" sample_step_m=").ok_or_else(bad)?;
    if !valid_identifier(id) {
        return Err(bad());
    }
    let step: f64 = step.parse().map_err(|_| bad())?;
    Ok((id.to_string(), step))
}

fn parse_column_line(line: &str) -> Result<usize, IngestError> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() < 5 || cols[..4] != ["pos_m", "p1", "p2", "p3"] {
        return Err(IngestError::BadHeader(format!(
            "expected `pos_m,p1,p2,p3,p4_0000,...`, got {line:?}"
        )));
    }
    for (i, name) in cols[4..].iter().enumerate() {
        if *name != format!("p4_{i:04}") {
            return Err(IngestError::BadHeader(format!(
                "column {} is {name:?}, expected p4_{i:04}",
                i + 5
            )));
        }
    }
    Ok(cols.len() - 4)
}

/// Parses and validates a coil file. The surface width is taken from the
/// column header.
pub fn parse_coil_csv(bytes: &[u8]) -> Result<CoilRecord, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IngestError::NotUtf8)?;
    let mut lines = text.lines();
    let (coil_id, sample_step_m) = parse_header_line(lines.next().unwrap_or(""))?;
    let width = parse_column_line(lines.next().unwrap_or(""))?;

    let mut raw = RawCoil {
        coil_id,
        sample_step_m,
        positions_m: Vec::new(),
        p1: Vec::new(),
        p2: Vec::new(),
        p3: Vec::new(),
        p4: Vec::new(),
    };
    for (k, line) in lines.enumerate() {
        let line_no = k + 3;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 + width {
            return Err(IngestError::BadRow {
                line: line_no,
                reason: format!("{} fields, expected {}", cells.len(), 4 + width),
            });
        }
        let mut values = Vec::with_capacity(cells.len());
        for cell in cells {
            let v: f64 = cell.parse().map_err(|_| IngestError::BadRow {
                line: line_no,
                reason: format!("{cell:?} is not a number"),
            })?;
            values.push(v);
        }
        raw.positions_m.push(values[0]);
        raw.p1.push(values[1]);
        raw.p2.push(values[2]);
        raw.p3.push(values[3]);
        raw.p4.push(values[4..].to_vec());
    }
    Ok(CoilRecord::validate(raw)?)
}

/// Canonical coil file bytes.
pub fn write_coil_csv(coil: &CoilRecord) -> Vec<u8> {
    let w = coil.width();
    let mut out = String::with_capacity(coil.len() * (4 + w) * 12);
    let _ = writeln!(
        out,
        "# coil_id={} sample_step_m={}",
        coil.coil_id(),
        coil.sample_step_m()
    );
    out.push_str("pos_m,p1,p2,p3");
    for i in 0..w {
        let _ = write!(out, ",p4_{i:04}");
    }
    out.push('\n');
    for j in 0..coil.len() {
        let _ = write!(
            out,
            "{},{},{},{}",
            coil.positions_m()[j],
            coil.p1()[j],
            coil.p2()[j],
            coil.p3()[j]
        );
        for v in coil.p4_row(j) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// One 4-D observation per length position: p1, p2, p3 and the mean of the
/// surface map across the width.
pub fn feature_matrix(coil: &CoilRecord) -> FeatureMatrix {
    let p4 = coil.p4_mean();
    FeatureMatrix::new(
        (0..coil.len())
            .map(|j| [coil.p1()[j], coil.p2()[j], coil.p3()[j], p4[j]])
            .collect(),
    )
}

pub fn write_labels_csv(labels: &LabelSet) -> Vec<u8> {
    let mut out = String::from("index,kind\n");
    for l in &labels.labels {
        let _ = writeln!(out, "{},{}", l.index, l.kind);
    }
    out.into_bytes()
}

pub fn parse_labels_csv(bytes: &[u8]) -> Result<LabelSet, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IngestError::NotUtf8)?;
    let mut lines = text.lines();
    if lines.next() != Some("index,kind") {
        return Err(IngestError::BadHeader("expected `index,kind`".into()));
    }
    let labels = lines
        .enumerate()
        .map(|(k, line)| {
            let bad = |reason: &str| IngestError::BadRow {
                line: k + 2,
                reason: reason.to_string(),
            };
            let (idx, kind) = line.split_once(',').ok_or_else(|| bad("expected 2 fields"))?;
            Ok(Label {
                index: idx.parse().map_err(|_| bad("bad index"))?,
                kind: kind.parse().map_err(|_| bad("unknown anomaly kind"))?,
            })
        })
        .collect::<Result<_, IngestError>>()?;
    Ok(LabelSet { labels })
}
