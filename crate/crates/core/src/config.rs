//! Run configuration document.
//!
//! ```json
//! {
//!   "assessment": {"p1": {"leaf": {"channel": "p1", "measure": {"kind": "variation", "n": 5}}}},
//!   "fucod": {"k_nn": 10},
//!   "outlier_threshold": 0.5,
//!   "orders": [ ... ],
//!   "profiles": [ ... ]
//! }
//! ```
//!
//! Every field is optional. Channels without an assessment tree use
//! [`default_assessment`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fucod::FucodConfig;
use crate::model::{CustomerProfile, OrderError, OrderSpec, CHANNELS};
use crate::plausibility::{AssessmentNode, Combinator, MeasureSpec, PlausibilityError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("assessment for {channel}: {source}")]
    Assessment {
        channel: String,
        source: PlausibilityError,
    },
    #[error("order {order_id}: {source}")]
    Order { order_id: String, source: OrderError },
    #[error("{0}")]
    Invalid(String),
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coils: Vec<PathBuf>,
    /// Assessment tree per channel.
    #[serde(default)]
    pub assessment: BTreeMap<String, AssessmentNode>,
    #[serde(default)]
    pub fucod: FucodConfig,
    #[serde(default = "default_threshold")]
    pub outlier_threshold: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<OrderSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<CustomerProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            coils: Vec::new(),
            assessment: BTreeMap::new(),
            fucod: FucodConfig::default(),
            outlier_threshold: default_threshold(),
            orders: Vec::new(),
            profiles: Vec::new(),
            output_dir: None,
        }
    }
}

/// Stuck-signal check on the channel itself, limited by the outlier
/// detector's view of the sample.
pub fn default_assessment(channel: &str) -> AssessmentNode {
    AssessmentNode::combine(
        Combinator::Min,
        vec![
            AssessmentNode::leaf(channel, MeasureSpec::Variation { n: 5 }),
            AssessmentNode::leaf(channel, MeasureSpec::DataDriven { source: "fucod".into() }),
        ],
    )
}

impl RunConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_slice(bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (channel, tree) in &self.assessment {
            if !CHANNELS.contains(&channel.as_str()) {
                return Err(ConfigError::UnknownChannel(channel.clone()));
            }
            if let Some(bad) = tree.channels().into_iter().find(|c| !CHANNELS.contains(c)) {
                return Err(ConfigError::UnknownChannel(bad.to_string()));
            }
            tree.validate().map_err(|source| ConfigError::Assessment {
                channel: channel.clone(),
                source,
            })?;
        }
        if !(0.0..=1.0).contains(&self.outlier_threshold) {
            return Err(ConfigError::Invalid(format!(
                "outlier_threshold = {}",
                self.outlier_threshold
            )));
        }
        // Sample count is unknown here; check everything else.
        self.fucod
            .validate(usize::MAX)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for order in &self.orders {
            order.validate().map_err(|source| ConfigError::Order {
                order_id: order.order_id.clone(),
                source,
            })?;
            if let Some(bad) = order.tolerances.keys().find(|c| !CHANNELS.contains(&c.as_str())) {
                return Err(ConfigError::UnknownChannel(bad.clone()));
            }
        }
        Ok(())
    }

    /// Tree for a channel, falling back to the default.
    pub fn assessment_for(&self, channel: &str) -> AssessmentNode {
        self.assessment
            .get(channel)
            .cloned()
            .unwrap_or_else(|| default_assessment(channel))
    }

    pub fn order(&self, order_id: &str) -> Option<&OrderSpec> {
        self.orders.iter().find(|o| o.order_id == order_id)
    }

    pub fn profile(&self, customer_id: &str) -> Option<&CustomerProfile> {
        self.profiles.iter().find(|p| p.customer_id == customer_id)
    }
}
