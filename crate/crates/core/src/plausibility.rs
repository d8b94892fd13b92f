//! Plausibility values from elementary measures.
//!
//! Each measure maps channel data to a value in [0, 1]. Measures sit in the
//! leaves of an [`AssessmentNode`] tree whose inner nodes combine child
//! series sample by sample.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoilRecord, PlausibilityValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlausibilityError {
    #[error("NON_FINITE_INPUT at sample {0}")]
    NonFiniteInput(usize),
    #[error("UNKNOWN_CHANNEL: {0:?}")]
    UnknownChannel(String),
    #[error("MISSING_DATA_DRIVEN_SOURCE: {0}")]
    MissingDataDrivenSource(String),
    #[error("EMPTY_SERIES")]
    EmptySeries,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid combinator: {0}")]
    InvalidCombinator(String),
}

type Result<T> = std::result::Result<T, PlausibilityError>;

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(PlausibilityError::NonFiniteInput(0))
    }
}

pub fn eval_constant(p_m: PlausibilityValue) -> PlausibilityValue {
    p_m
}

/// Indicator of the closed interval `[t_min, t_max]`.
pub fn eval_threshold(x: f64, t_min: f64, t_max: f64) -> Result<PlausibilityValue> {
    let x = finite(x)?;
    Ok(if t_min <= x && x <= t_max {
        PlausibilityValue::ONE
    } else {
        PlausibilityValue::ZERO
    })
}

/// Trapezoidal membership with support `(t0, t3)` and plateau `[t1, t2]`.
///
/// The plateau is closed on both sides, so `t0 == t1` gives a step up at
/// `t1` and `t2 == t3` a step down after `t2`.
pub fn eval_fuzzy(x: f64, t0: f64, t1: f64, t2: f64, t3: f64) -> Result<PlausibilityValue> {
    let x = finite(x)?;
    let v = if t1 <= x && x <= t2 {
        1.0
    } else if x <= t0 || x >= t3 {
        0.0
    } else if x < t1 {
        (x - t0) / (t1 - t0)
    } else {
        (t3 - x) / (t3 - t2)
    };
    Ok(PlausibilityValue::saturating(v))
}

/// Stuck-signal check over a trailing window of `n` samples.
///
/// A sample gets 0 when its window (itself and the `n - 1` samples before
/// it) is constant, 1 otherwise. The first `n - 1` samples have no full
/// window and get 1.
pub fn eval_variation(series: &[f64], n: usize) -> Result<Vec<PlausibilityValue>> {
    if n < 2 {
        return Err(PlausibilityError::InvalidMeasure(format!(
            "variation window n = {n}, must be at least 2"
        )));
    }
    if let Some(i) = series.iter().position(|x| !x.is_finite()) {
        return Err(PlausibilityError::NonFiniteInput(i));
    }
    // Length of the run of equal values ending at each index; the window is
    // constant exactly when that run covers n samples.
    let mut run = 0usize;
    let mut out = Vec::with_capacity(series.len());
    for (i, &x) in series.iter().enumerate() {
        run = if i > 0 && x == series[i - 1] { run + 1 } else { 1 };
        out.push(if run >= n {
            PlausibilityValue::ZERO
        } else {
            PlausibilityValue::ONE
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvSummary {
    pub pv_min: f64,
    pub pv_mean: f64,
}

pub fn pv_summary(pv: &[PlausibilityValue]) -> Result<PvSummary> {
    if pv.is_empty() {
        return Err(PlausibilityError::EmptySeries);
    }
    let pv_min = pv.iter().map(|p| p.get()).fold(f64::INFINITY, f64::min);
    let pv_mean = pv.iter().map(|p| p.get()).sum::<f64>() / pv.len() as f64;
    Ok(PvSummary {
        pv_min,
        pv_mean: pv_mean.clamp(pv_min, 1.0),
    })
}

// ---------------------------------------------------------------------------
// Assessment trees

fn default_source() -> String {
    "fucod".to_string()
}

/// An elementary plausibility measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Constant {
        p_m: PlausibilityValue,
    },
    Threshold {
        t_min: f64,
        t_max: f64,
    },
    Fuzzy {
        t0: f64,
        t1: f64,
        t2: f64,
        t3: f64,
    },
    Variation {
        n: usize,
    },
    /// Per-sample values supplied from outside the tree, by default the
    /// complement of the fused outlier level.
    DataDriven {
        #[serde(default = "default_source")]
        source: String,
    },
}

impl MeasureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PlausibilityError::InvalidMeasure(m));
        match *self {
            MeasureSpec::Constant { .. } | MeasureSpec::DataDriven { .. } => Ok(()),
            MeasureSpec::Threshold { t_min, t_max } => {
                if t_min.is_nan() || t_max.is_nan() || t_min > t_max {
                    bad(format!("threshold needs t_min <= t_max, got {t_min} > {t_max}"))
                } else {
                    Ok(())
                }
            }
            MeasureSpec::Fuzzy { t0, t1, t2, t3 } => {
                if [t0, t1, t2, t3].iter().any(|t| t.is_nan()) || !(t0 <= t1 && t1 <= t2 && t2 <= t3)
                {
                    bad(format!("fuzzy needs t0 <= t1 <= t2 <= t3, got {t0}, {t1}, {t2}, {t3}"))
                } else {
                    Ok(())
                }
            }
            MeasureSpec::Variation { n } => {
                if n < 2 {
                    bad(format!("variation window n = {n}, must be at least 2"))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn eval(&self, series: &[f64], external: Option<&[PlausibilityValue]>) -> Result<Vec<PlausibilityValue>> {
        let pointwise = |f: &dyn Fn(f64) -> Result<PlausibilityValue>| {
            series
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    f(x).map_err(|e| match e {
                        PlausibilityError::NonFiniteInput(_) => PlausibilityError::NonFiniteInput(i),
                        e => e,
                    })
                })
                .collect::<Result<Vec<_>>>()
        };
        match self {
            MeasureSpec::Constant { p_m } => Ok(vec![eval_constant(*p_m); series.len()]),
            MeasureSpec::Threshold { t_min, t_max } => {
                pointwise(&|x| eval_threshold(x, *t_min, *t_max))
            }
            MeasureSpec::Fuzzy { t0, t1, t2, t3 } => {
                pointwise(&|x| eval_fuzzy(x, *t0, *t1, *t2, *t3))
            }
            MeasureSpec::Variation { n } => eval_variation(series, *n),
            MeasureSpec::DataDriven { source } => match external {
                Some(pv) if pv.len() == series.len() => Ok(pv.to_vec()),
                Some(pv) => Err(PlausibilityError::MissingDataDrivenSource(format!(
                    "{source}: {} values for {} samples",
                    pv.len(),
                    series.len()
                ))),
                None => Err(PlausibilityError::MissingDataDrivenSource(source.clone())),
            },
        }
    }
}

/// How an inner node merges its children.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Combinator {
    #[default]
    Min,
    Max,
    Product,
    /// Non-negative weights summing to one, one per child.
    WeightedMean(Vec<f64>),
}

impl Combinator {
    fn apply(&self, values: &[f64]) -> f64 {
        match self {
            Combinator::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Combinator::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Combinator::Product => values.iter().product(),
            Combinator::WeightedMean(w) => w.iter().zip(values).map(|(w, v)| w * v).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CombinatorKind {
    #[default]
    Min,
    Max,
    Product,
    WeightedMean,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CombineDoc {
    #[serde(default)]
    op: CombinatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    children: Vec<AssessmentNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafDoc {
    channel: String,
    measure: MeasureSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NodeDoc {
    Leaf(LeafDoc),
    Combine(CombineDoc),
}

/// A plausibility assessment: measures on channels, combined sample by
/// sample.
///
/// In documents a leaf is `{"leaf": {"channel": "p1", "measure": {...}}}`
/// and an inner node `{"combine": {"op": "min", "children": [...]}}`;
/// `op` defaults to `min`, and `weighted_mean` takes a `weights` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NodeDoc", into = "NodeDoc")]
pub enum AssessmentNode {
    Leaf {
        channel: String,
        measure: MeasureSpec,
    },
    Combine {
        op: Combinator,
        children: Vec<AssessmentNode>,
    },
}

impl TryFrom<NodeDoc> for AssessmentNode {
    type Error = PlausibilityError;

    fn try_from(doc: NodeDoc) -> Result<Self> {
        let node = match doc {
            NodeDoc::Leaf(LeafDoc { channel, measure }) => AssessmentNode::Leaf { channel, measure },
            NodeDoc::Combine(CombineDoc {
                op,
                weights,
                children,
            }) => {
                let op = match (op, weights) {
                    (CombinatorKind::WeightedMean, Some(w)) => Combinator::WeightedMean(w),
                    (CombinatorKind::WeightedMean, None) => {
                        return Err(PlausibilityError::InvalidCombinator(
                            "weighted_mean requires weights".into(),
                        ))
                    }
                    (_, Some(_)) => {
                        return Err(PlausibilityError::InvalidCombinator(
                            "weights are only allowed for weighted_mean".into(),
                        ))
                    }
                    (CombinatorKind::Min, None) => Combinator::Min,
                    (CombinatorKind::Max, None) => Combinator::Max,
                    (CombinatorKind::Product, None) => Combinator::Product,
                };
                AssessmentNode::Combine { op, children }
            }
        };
        node.validate_shallow()?;
        Ok(node)
    }
}

impl From<AssessmentNode> for NodeDoc {
    fn from(node: AssessmentNode) -> Self {
        match node {
            AssessmentNode::Leaf { channel, measure } => NodeDoc::Leaf(LeafDoc { channel, measure }),
            AssessmentNode::Combine { op, children } => {
                let (op, weights) = match op {
                    Combinator::Min => (CombinatorKind::Min, None),
                    Combinator::Max => (CombinatorKind::Max, None),
                    Combinator::Product => (CombinatorKind::Product, None),
                    Combinator::WeightedMean(w) => (CombinatorKind::WeightedMean, Some(w)),
                };
                NodeDoc::Combine(CombineDoc {
                    op,
                    weights,
                    children,
                })
            }
        }
    }
}

impl AssessmentNode {
    pub fn leaf(channel: &str, measure: MeasureSpec) -> Self {
        AssessmentNode::Leaf {
            channel: channel.to_string(),
            measure,
        }
    }

    pub fn combine(op: Combinator, children: Vec<AssessmentNode>) -> Self {
        AssessmentNode::Combine { op, children }
    }

    fn validate_shallow(&self) -> Result<()> {
        match self {
            AssessmentNode::Leaf { measure, .. } => measure.validate(),
            AssessmentNode::Combine { op, children } => {
                if children.is_empty() {
                    return Err(PlausibilityError::InvalidCombinator(
                        "combine node without children".into(),
                    ));
                }
                if let Combinator::WeightedMean(w) = op {
                    if w.len() != children.len() {
                        return Err(PlausibilityError::InvalidCombinator(format!(
                            "{} weights for {} children",
                            w.len(),
                            children.len()
                        )));
                    }
                    if w.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                        return Err(PlausibilityError::InvalidCombinator(
                            "weights must be non-negative".into(),
                        ));
                    }
                    let sum: f64 = w.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(PlausibilityError::InvalidCombinator(format!(
                            "weights sum to {sum}, not 1"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Checks parameters of every node in the tree.
    pub fn validate(&self) -> Result<()> {
        self.validate_shallow()?;
        if let AssessmentNode::Combine { children, .. } = self {
            children.iter().try_for_each(AssessmentNode::validate)?;
        }
        Ok(())
    }

    /// Channel names referenced by the leaves.
    pub fn channels(&self) -> Vec<&str> {
        match self {
            AssessmentNode::Leaf { channel, .. } => vec![channel.as_str()],
            AssessmentNode::Combine { children, .. } => {
                children.iter().flat_map(AssessmentNode::channels).collect()
            }
        }
    }

    pub fn uses_data_driven(&self) -> bool {
        match self {
            AssessmentNode::Leaf { measure, .. } => matches!(measure, MeasureSpec::DataDriven { .. }),
            AssessmentNode::Combine { children, .. } => {
                children.iter().any(AssessmentNode::uses_data_driven)
            }
        }
    }
}

/// Evaluates a tree over every sample of a coil.
///
/// `external` feeds `DataDriven` leaves and must have one value per sample.
pub fn eval_assessment(
    tree: &AssessmentNode,
    coil: &CoilRecord,
    external: Option<&[PlausibilityValue]>,
) -> Result<Vec<PlausibilityValue>> {
    tree.validate()?;
    eval_node(tree, &|name| coil.channel(name), coil.len(), external)
}

/// Same as [`eval_assessment`] with channels looked up by a closure.
pub fn eval_with(
    tree: &AssessmentNode,
    lookup: &dyn Fn(&str) -> Option<Vec<f64>>,
    n: usize,
    external: Option<&[PlausibilityValue]>,
) -> Result<Vec<PlausibilityValue>> {
    tree.validate()?;
    eval_node(tree, lookup, n, external)
}

fn eval_node(
    node: &AssessmentNode,
    lookup: &dyn Fn(&str) -> Option<Vec<f64>>,
    n: usize,
    external: Option<&[PlausibilityValue]>,
) -> Result<Vec<PlausibilityValue>> {
    match node {
        AssessmentNode::Leaf { channel, measure } => {
            let series =
                lookup(channel).ok_or_else(|| PlausibilityError::UnknownChannel(channel.clone()))?;
            debug_assert_eq!(series.len(), n);
            measure.eval(&series, external)
        }
        AssessmentNode::Combine { op, children } => {
            let evaluated = children
                .iter()
                .map(|c| eval_node(c, lookup, n, external))
                .collect::<Result<Vec<_>>>()?;
            let mut buf = vec![0.0; evaluated.len()];
            Ok((0..n)
                .map(|j| {
                    for (slot, child) in buf.iter_mut().zip(&evaluated) {
                        *slot = child[j].get();
                    }
                    PlausibilityValue::saturating(op.apply(&buf))
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawCoil;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn pv(x: f64) -> PlausibilityValue {
        PlausibilityValue::new(x).unwrap()
    }

    fn values(v: &[PlausibilityValue]) -> Vec<f64> {
        v.iter().map(|p| p.get()).collect()
    }

    fn coil(p1: Vec<f64>) -> CoilRecord {
        let n = p1.len();
        CoilRecord::validate(RawCoil {
            coil_id: "T".into(),
            sample_step_m: 1.0,
            positions_m: (0..n).map(|i| i as f64).collect(),
            p2: p1.clone(),
            p3: p1.clone(),
            p4: p1.iter().map(|&x| vec![x, x + 2.0]).collect(),
            p1,
        })
        .unwrap()
    }

    fn constant(p: f64) -> AssessmentNode {
        AssessmentNode::leaf("p1", MeasureSpec::Constant { p_m: pv(p) })
    }

    #[test]
    fn constant_returns_parameter() {
        assert_eq!(eval_constant(pv(0.7)).get(), 0.7);
        assert_eq!(eval_constant(pv(0.0)).get(), 0.0);
        assert_eq!(eval_constant(pv(1.0)).get(), 1.0);
    }

    #[test]
    fn threshold_is_closed_interval() {
        assert_eq!(eval_threshold(5.0, 1.0, 10.0).unwrap().get(), 1.0);
        assert_eq!(eval_threshold(0.5, 1.0, 10.0).unwrap().get(), 0.0);
        assert_eq!(eval_threshold(1.0, 1.0, 10.0).unwrap().get(), 1.0);
        assert_eq!(eval_threshold(10.0, 1.0, 10.0).unwrap().get(), 1.0);
        assert_eq!(eval_threshold(10.5, 1.0, 10.0).unwrap().get(), 0.0);
        assert_eq!(
            eval_threshold(f64::NAN, 1.0, 10.0),
            Err(PlausibilityError::NonFiniteInput(0))
        );
    }

    #[test]
    fn fuzzy_trapezoid() {
        let f = |x| eval_fuzzy(x, 1.0, 2.0, 3.0, 4.0).unwrap().get();
        assert!((f(1.5) - 0.5).abs() <= TOL);
        assert!((f(2.5) - 1.0).abs() <= TOL);
        assert!((f(4.0) - 0.0).abs() <= TOL);
        assert_eq!(f(2.0), 1.0);
        assert_eq!(f(1.0), 0.0);
        assert!((f(3.25) - 0.75).abs() <= TOL);
        assert_eq!(f(-7.0), 0.0);
        assert!(eval_fuzzy(f64::INFINITY, 1.0, 2.0, 3.0, 4.0).is_err());
    }

    #[test]
    fn fuzzy_steps_on_degenerate_edges() {
        assert_eq!(eval_fuzzy(1.0, 1.0, 1.0, 3.0, 4.0).unwrap().get(), 1.0);
        assert_eq!(eval_fuzzy(0.999, 1.0, 1.0, 3.0, 4.0).unwrap().get(), 0.0);
        assert_eq!(eval_fuzzy(3.0, 1.0, 2.0, 3.0, 3.0).unwrap().get(), 1.0);
        assert_eq!(eval_fuzzy(3.001, 1.0, 2.0, 3.0, 3.0).unwrap().get(), 0.0);
    }

    #[test]
    fn variation_examples() {
        let v = |s: &[f64], n| values(&eval_variation(s, n).unwrap());
        assert_eq!(v(&[3.0, 3.0, 3.0, 3.0], 3), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(v(&[1.0, 2.0, 3.0], 3), vec![1.0, 1.0, 1.0]);
        assert_eq!(v(&[1.0, 1.0, 2.0, 2.0, 2.0], 2), vec![1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(eval_variation(&[1.0], 1).is_err());
        assert_eq!(
            eval_variation(&[1.0, f64::NAN], 2),
            Err(PlausibilityError::NonFiniteInput(1))
        );
    }

    #[test]
    fn summary_examples() {
        let s = |xs: &[f64]| pv_summary(&xs.iter().map(|&x| pv(x)).collect::<Vec<_>>()).unwrap();
        assert_eq!(s(&[1.0, 1.0, 1.0]), PvSummary { pv_min: 1.0, pv_mean: 1.0 });
        assert_eq!(s(&[0.0, 1.0]), PvSummary { pv_min: 0.0, pv_mean: 0.5 });
        let r = s(&[0.2, 0.4, 0.6]);
        assert!((r.pv_min - 0.2).abs() <= TOL && (r.pv_mean - 0.4).abs() <= TOL);
        assert_eq!(pv_summary(&[]), Err(PlausibilityError::EmptySeries));
    }

    #[test]
    fn combinators_on_constants() {
        let c = coil(vec![1.0, 2.0, 3.0]);
        let eval = |t: &AssessmentNode| values(&eval_assessment(t, &c, None).unwrap());
        let min = AssessmentNode::combine(Combinator::Min, vec![constant(0.8), constant(0.6)]);
        assert_eq!(eval(&min), vec![0.6; 3]);
        let prod = AssessmentNode::combine(Combinator::Product, vec![constant(0.5), constant(0.5)]);
        assert_eq!(eval(&prod), vec![0.25; 3]);
        let wm = AssessmentNode::combine(
            Combinator::WeightedMean(vec![0.25, 0.75]),
            vec![constant(0.0), constant(1.0)],
        );
        assert_eq!(eval(&wm), vec![0.75; 3]);
    }

    #[test]
    fn unknown_channel_and_missing_source() {
        let c = coil(vec![1.0, 2.0]);
        let t = AssessmentNode::leaf("p9", MeasureSpec::Variation { n: 2 });
        assert_eq!(
            eval_assessment(&t, &c, None),
            Err(PlausibilityError::UnknownChannel("p9".into()))
        );
        let dd = AssessmentNode::leaf("p1", MeasureSpec::DataDriven { source: "fucod".into() });
        assert!(matches!(
            eval_assessment(&dd, &c, None),
            Err(PlausibilityError::MissingDataDrivenSource(_))
        ));
        assert!(matches!(
            eval_assessment(&dd, &c, Some(&[pv(1.0)])),
            Err(PlausibilityError::MissingDataDrivenSource(_))
        ));
        let ext = [pv(0.3), pv(0.9)];
        assert_eq!(values(&eval_assessment(&dd, &c, Some(&ext)).unwrap()), vec![0.3, 0.9]);
    }

    #[test]
    fn p4_channel_is_width_mean() {
        let c = coil(vec![1.0, 2.0]);
        let t = AssessmentNode::leaf("p4", MeasureSpec::Threshold { t_min: 2.5, t_max: 3.5 });
        assert_eq!(values(&eval_assessment(&t, &c, None).unwrap()), vec![0.0, 1.0]);
    }

    #[test]
    fn invalid_trees_are_rejected() {
        let bad_weights = AssessmentNode::combine(
            Combinator::WeightedMean(vec![0.5, 0.6]),
            vec![constant(0.0), constant(1.0)],
        );
        assert!(bad_weights.validate().is_err());
        let empty = AssessmentNode::combine(Combinator::Min, vec![]);
        assert!(empty.validate().is_err());
        let fuzzy = AssessmentNode::leaf(
            "p1",
            MeasureSpec::Fuzzy { t0: 2.0, t1: 1.0, t2: 3.0, t3: 4.0 },
        );
        assert!(fuzzy.validate().is_err());
    }

    #[test]
    fn tree_document_format() {
        let doc = r#"{"combine": {"children": [
            {"leaf": {"channel": "p1", "measure": {"kind": "variation", "n": 5}}},
            {"combine": {"op": "weighted_mean", "weights": [0.5, 0.5], "children": [
                {"leaf": {"channel": "p2", "measure": {"kind": "fuzzy", "t0": 0, "t1": 1, "t2": 2, "t3": 3}}},
                {"leaf": {"channel": "p2", "measure": {"kind": "data_driven"}}}
            ]}}
        ]}}"#;
        let tree: AssessmentNode = serde_json::from_str(doc).unwrap();
        let AssessmentNode::Combine { op, children } = &tree else { panic!() };
        assert_eq!(*op, Combinator::Min);
        assert_eq!(children.len(), 2);
        assert!(tree.uses_data_driven());
        assert_eq!(tree.channels(), vec!["p1", "p2", "p2"]);
        let back: AssessmentNode =
            serde_json::from_str(&serde_json::to_string(&tree).unwrap()).unwrap();
        assert_eq!(back, tree);

        let missing = r#"{"combine": {"op": "weighted_mean", "children": [
            {"leaf": {"channel": "p1", "measure": {"kind": "constant", "p_m": 1}}}]}}"#;
        assert!(serde_json::from_str::<AssessmentNode>(missing).is_err());
        let out_of_range = r#"{"leaf": {"channel": "p1", "measure": {"kind": "constant", "p_m": 2}}}"#;
        assert!(serde_json::from_str::<AssessmentNode>(out_of_range).is_err());
    }

    fn ordered4() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        prop::collection::vec(-100.0..100.0f64, 4).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            (v[0], v[1], v[2], v[3])
        })
    }

    proptest! {
        #[test]
        fn outputs_stay_in_unit_interval(x in -1e6..1e6f64, (t0, t1, t2, t3) in ordered4()) {
            let f = eval_fuzzy(x, t0, t1, t2, t3).unwrap().get();
            prop_assert!((0.0..=1.0).contains(&f));
            let t = eval_threshold(x, t1, t2).unwrap().get();
            prop_assert!(t == 0.0 || t == 1.0);
        }

        #[test]
        fn fuzzy_degenerates_to_threshold(x in -200.0..200.0f64, a in -100.0..100.0f64, b in -100.0..100.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert_eq!(eval_fuzzy(x, lo, lo, hi, hi).unwrap(), eval_threshold(x, lo, hi).unwrap());
            prop_assert_eq!(eval_fuzzy(lo, lo, lo, hi, hi).unwrap(), eval_threshold(lo, lo, hi).unwrap());
        }

        #[test]
        fn fuzzy_is_continuous_with_proper_ramps(x in -50.0..50.0f64, (t0, t1, t2, t3) in ordered4()) {
            prop_assume!(t1 - t0 > 1e-3 && t3 - t2 > 1e-3);
            let h = 1e-9;
            let a = eval_fuzzy(x, t0, t1, t2, t3).unwrap().get();
            let b = eval_fuzzy(x + h, t0, t1, t2, t3).unwrap().get();
            let slope = 1.0 / (t1 - t0).min(t3 - t2);
            prop_assert!((a - b).abs() <= slope * h * (1.0 + 1e-6) + 1e-12);
        }

        #[test]
        fn combinator_ordering(ps in prop::collection::vec(0.0..=1.0f64, 1..5), raw_w in prop::collection::vec(0.01..1.0f64, 5)) {
            let w: Vec<f64> = raw_w[..ps.len()].to_vec();
            let s: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / s).collect();
            let prod = Combinator::Product.apply(&ps);
            let min = Combinator::Min.apply(&ps);
            let wm = Combinator::WeightedMean(w).apply(&ps);
            let max = Combinator::Max.apply(&ps);
            prop_assert!(prod <= min + 1e-12);
            prop_assert!(min <= wm + 1e-12);
            prop_assert!(wm <= max + 1e-12);
        }

        #[test]
        fn variation_is_translation_invariant(levels in prop::collection::vec(0..3i32, 1..60), shift in -1000..1000i32, n in 2..6usize) {
            let series: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
            let shifted: Vec<f64> = series.iter().map(|x| x + shift as f64).collect();
            prop_assert_eq!(eval_variation(&series, n).unwrap(), eval_variation(&shifted, n).unwrap());
        }

        #[test]
        fn variation_matches_window_definition(levels in prop::collection::vec(0..2i32, 1..40), n in 2..5usize) {
            let s: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
            let got = values(&eval_variation(&s, n).unwrap());
            for i in 0..s.len() {
                let expect = if i + 1 < n {
                    1.0
                } else {
                    let w = &s[i + 1 - n..=i];
                    let spread = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                        - w.iter().cloned().fold(f64::INFINITY, f64::min);
                    if spread == 0.0 { 0.0 } else { 1.0 }
                };
                prop_assert_eq!(got[i], expect);
            }
        }
    }
}
