//! Transparent product-quality supervision for rolled coils.
//!
//! The crate is organised along the data flow of a coil through the
//! supervision chain:
//!
//! * [`ingest`] reads and writes coil files, builds the 4-D feature matrix
//!   and generates labelled synthetic coils.
//! * [`plausibility`] turns raw channel data into per-sample plausibility
//!   values with a small combinator tree of elementary measures.
//! * [`fucod`] scores every sample with four outlier detectors and fuses
//!   them with a Mamdani fuzzy inference system.
//! * [`qgs`] composes the two into a [`QualityRecord`].
//! * [`qas`] decides whether a record fits an order and what a customer
//!   gets to see.
//! * [`qxs`] encodes certificates and exchanges them over TCP.

pub mod config;
pub mod fucod;
pub mod ingest;
pub mod model;
pub mod plausibility;
pub mod qas;
pub mod qgs;
pub mod qxs;
pub(crate) mod stats;

pub use model::{
    AllocationDecision, Band, ChannelSeries, ChannelSummary, CoilRecord, CustomerProfile,
    DetectorScores, FeatureMatrix, FeedbackItem, FeedbackKind, FeedbackReport, Intimacy,
    OrderSpec, OutlierLevel, PlausibilityValue, QualityCertificate, QualityRecord, Reason,
    RecordSummary, Verdict, CHANNELS,
};
