//! Robust low-rank anomaly detection for multivariate cyber-physical telemetry.
//!
//! Training separates a (possibly polluted) data matrix into a low-rank part and a
//! sparse corruption part with Principal Component Pursuit, extracts an orthonormal
//! basis `A` of the low-rank row space, and summarizes normal behavior by the
//! geometric median `m` of the projected training rows together with a radius
//! `θ`. A new reading `x` is scored as `‖m − A(Aᵀx)‖₂` in `O(d·r)` time and flagged
//! when the score exceeds `θ`.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: SVD wrappers, shrinkage operators, basis extraction, projection.
//! * [`pcp`]: inexact augmented-Lagrangian solver for Principal Component Pursuit.
//! * [`median`]: Weiszfeld iteration for the geometric median.
//! * [`model`]: training, scoring and classification, plus a plain-PCA baseline.
//! * [`pipeline`]: CSV ingestion, robust scaling, corruption injection, metrics.
//!
//! Row-parallel work (batch scoring, projecting training rows, median weights) runs
//! on rayon when the default `parallel` feature is enabled and falls back to plain
//! iterators otherwise. Results are identical either way.

pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod median;
pub mod model;
pub mod par;
pub mod pcp;
pub mod pipeline;

pub use error::{RadError, Result};
pub use linalg::{Basis, DataMatrix, SvdFactors};
pub use median::{geometric_median, MedianConfig, MedianResult};
pub use model::{
    classify, score, train, train_pca_baseline, train_with_report, Provenance, RadModel, ScoreRecord,
    ThresholdMode, TrainConfig, Verdict,
};
pub use pcp::{default_lambda, pcp_decompose, PcpConfig, PcpResult};
