//! Deterministic synthetic coils with labelled anomalies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rng::Gaussian;
use super::IngestError;
use crate::model::{valid_identifier, CoilRecord, RawCoil};

/// `base + amplitude * sin(2π j / period) + sigma * N(0, 1)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub base: f64,
    pub amplitude: f64,
    /// In samples.
    pub period: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnomalyKind {
    /// One sample offset by `magnitude` sigmas.
    Spike,
    /// Channel frozen at its value at `start` for `length` samples.
    Stuck,
    /// Rectangle of the surface map offset by `magnitude` sigmas.
    SurfaceBurst,
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnomalyKind::Spike => "SPIKE",
            AnomalyKind::Stuck => "STUCK",
            AnomalyKind::SurfaceBurst => "SURFACE_BURST",
        })
    }
}

impl FromStr for AnomalyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SPIKE" => Ok(AnomalyKind::Spike),
            "STUCK" => Ok(AnomalyKind::Stuck),
            "SURFACE_BURST" => Ok(AnomalyKind::SurfaceBurst),
            _ => Err(format!("unknown anomaly kind {s:?}")),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anomaly {
    pub kind: AnomalyKind,
    /// `p1`..`p4`; a spike or stuck run on `p4` affects whole rows.
    pub channel: String,
    pub start: usize,
    #[serde(default = "one")]
    pub length: usize,
    #[serde(default)]
    pub magnitude: f64,
    /// First surface column of a burst.
    #[serde(default)]
    pub col_start: usize,
    /// Burst width in columns; the rest of the width when absent.
    #[serde(default)]
    pub col_len: Option<usize>,
}

impl Anomaly {
    pub fn spike(channel: &str, index: usize, magnitude: f64) -> Self {
        Self {
            kind: AnomalyKind::Spike,
            channel: channel.into(),
            start: index,
            length: 1,
            magnitude,
            col_start: 0,
            col_len: None,
        }
    }

    pub fn stuck(channel: &str, start: usize, length: usize) -> Self {
        Self {
            kind: AnomalyKind::Stuck,
            channel: channel.into(),
            start,
            length,
            magnitude: 0.0,
            col_start: 0,
            col_len: None,
        }
    }

    pub fn surface_burst(start: usize, length: usize, col_start: usize, col_len: usize, magnitude: f64) -> Self {
        Self {
            kind: AnomalyKind::SurfaceBurst,
            channel: "p4".into(),
            start,
            length,
            magnitude,
            col_start,
            col_len: Some(col_len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub coil_id: String,
    pub n_samples: usize,
    /// Surface map width positions.
    pub width: usize,
    pub sample_step_m: f64,
    pub p1: ChannelParams,
    pub p2: ChannelParams,
    pub p3: ChannelParams,
    /// Applies to every surface cell.
    pub p4: ChannelParams,
    pub anomalies: Vec<Anomaly>,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            coil_id: "SYN-0001".into(),
            n_samples: 10_000,
            width: 64,
            sample_step_m: 0.1,
            p1: ChannelParams { base: 100.0, amplitude: 2.0, period: 2000.0, sigma: 1.0 },
            p2: ChannelParams { base: 50.0, amplitude: 1.0, period: 3100.0, sigma: 0.5 },
            p3: ChannelParams { base: 10.0, amplitude: 0.2, period: 1700.0, sigma: 0.1 },
            p4: ChannelParams { base: 0.0, amplitude: 0.5, period: 2600.0, sigma: 1.0 },
            anomalies: Vec::new(),
        }
    }
}

impl SynthParams {
    fn channel(&self, name: &str) -> Option<ChannelParams> {
        match name {
            "p1" => Some(self.p1),
            "p2" => Some(self.p2),
            "p3" => Some(self.p3),
            "p4" => Some(self.p4),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::InvalidParams(m));
        if !valid_identifier(&self.coil_id) {
            return bad(format!("coil_id {:?}", self.coil_id));
        }
        if self.n_samples == 0 || self.width == 0 {
            return bad("n_samples and width must be positive".into());
        }
        if !(self.sample_step_m > 0.0 && self.sample_step_m.is_finite()) {
            return bad(format!("sample_step_m = {}", self.sample_step_m));
        }
        for (name, c) in [("p1", self.p1), ("p2", self.p2), ("p3", self.p3), ("p4", self.p4)] {
            let ok = c.base.is_finite()
                && c.amplitude.is_finite()
                && c.period.is_finite()
                && c.period > 0.0
                && c.sigma.is_finite()
                && c.sigma >= 0.0;
            if !ok {
                return bad(format!("channel {name}: {c:?}"));
            }
        }
        for a in &self.anomalies {
            if self.channel(&a.channel).is_none() {
                return bad(format!("unknown channel {:?}", a.channel));
            }
            if !a.magnitude.is_finite() {
                return bad(format!("magnitude {}", a.magnitude));
            }
            if a.length == 0 || a.start >= self.n_samples || a.start + a.length > self.n_samples {
                return bad(format!(
                    "{} at {}..{} outside 0..{}",
                    a.kind,
                    a.start,
                    a.start + a.length,
                    self.n_samples
                ));
            }
            match a.kind {
                AnomalyKind::Spike if a.length != 1 => return bad("a spike has length 1".into()),
                AnomalyKind::SurfaceBurst => {
                    if a.channel != "p4" {
                        return bad("surface bursts apply to p4".into());
                    }
                    let len = a.col_len.unwrap_or(self.width.saturating_sub(a.col_start));
                    if len == 0 || a.col_start + len > self.width {
                        return bad(format!("burst columns {}..{} outside width", a.col_start, a.col_start + len));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Label {
    pub index: usize,
    pub kind: AnomalyKind,
}

/// Ground truth of a synthetic coil, sorted by index then kind.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet {
    pub labels: Vec<Label>,
}

impl LabelSet {
    pub fn indices(&self, kind: AnomalyKind) -> Vec<usize> {
        self.labels.iter().filter(|l| l.kind == kind).map(|l| l.index).collect()
    }
}

/// Generates a coil from `params`. The same parameters always give the same
/// coil, bit for bit.
pub fn synth_coil(params: &SynthParams) -> Result<(CoilRecord, LabelSet), IngestError> {
    params.validate()?;
    let n = params.n_samples;
    let w = params.width;
    let mut gauss = Gaussian::new(params.seed);
    let wave = |c: &ChannelParams, j: usize| c.base + c.amplitude * (2.0 * PI * j as f64 / c.period).sin();

    let mut p1 = Vec::with_capacity(n);
    let mut p2 = Vec::with_capacity(n);
    let mut p3 = Vec::with_capacity(n);
    let mut p4 = Vec::with_capacity(n);
    for j in 0..n {
        p1.push(wave(&params.p1, j) + params.p1.sigma * gauss.next());
        p2.push(wave(&params.p2, j) + params.p2.sigma * gauss.next());
        p3.push(wave(&params.p3, j) + params.p3.sigma * gauss.next());
        let base4 = wave(&params.p4, j);
        p4.push((0..w).map(|_| base4 + params.p4.sigma * gauss.next()).collect::<Vec<f64>>());
    }

    let mut labels = Vec::new();
    for a in &params.anomalies {
        let sigma = params.channel(&a.channel).map_or(0.0, |c| c.sigma);
        let run = a.start..a.start + a.length;
        let series = match a.channel.as_str() {
            "p1" => Some(&mut p1),
            "p2" => Some(&mut p2),
            "p3" => Some(&mut p3),
            _ => None,
        };
        match (a.kind, series) {
            (AnomalyKind::Spike, Some(s)) => s[a.start] += a.magnitude * sigma,
            (AnomalyKind::Spike, None) => {
                for v in &mut p4[a.start] {
                    *v += a.magnitude * sigma;
                }
            }
            (AnomalyKind::Stuck, Some(s)) => {
                let v = s[a.start];
                s[run.clone()].fill(v);
            }
            (AnomalyKind::Stuck, None) => {
                let row = p4[a.start].clone();
                for r in &mut p4[run.clone()] {
                    r.clone_from(&row);
                }
            }
            (AnomalyKind::SurfaceBurst, _) => {
                let len = a.col_len.unwrap_or(w - a.col_start);
                for r in &mut p4[run.clone()] {
                    for v in &mut r[a.col_start..a.col_start + len] {
                        *v += a.magnitude * sigma;
                    }
                }
            }
        }
        labels.extend(run.map(|index| Label { index, kind: a.kind }));
    }
    labels.sort();
    labels.dedup();

    let coil = CoilRecord::validate(RawCoil {
        coil_id: params.coil_id.clone(),
        sample_step_m: params.sample_step_m,
        positions_m: (0..n).map(|j| j as f64 * params.sample_step_m).collect(),
        p1,
        p2,
        p3,
        p4,
    })?;
    Ok((coil, LabelSet { labels }))
}
