//! Data handling around the model: CSV ingestion and export, robust
//! standardization, corruption injection for robustness experiments, and
//! detection metrics.

mod corruption;
mod dataset;
mod metrics;
mod scaler;

pub use corruption::{inject_corruption, CorruptionSpec};
pub use dataset::{
    load_csv, read_csv, write_csv, CsvSchema, Dataset, Label, Loaded, RejectedRow, RowLayout,
};
pub use metrics::{attack_segments, evaluate, DetectionMetrics, Segment, SegmentDelay};
pub use scaler::{standardize, Scaler};
