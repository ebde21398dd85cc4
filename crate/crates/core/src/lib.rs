//! Core engine for hypothesis-driven visual data analysis.
//!
//! The crate is split along the path a hypothesis takes through the system:
//!
//! - [`data`] ingests CSV datasets, profiles their columns and executes chart
//!   data queries (filter, bin, group, aggregate, sort, limit) together with
//!   Pearson correlation and quantile labeling.
//! - [`chart`] defines the declarative [`chart::ChartSpec`], validates it
//!   against a dataset, repairs common generation faults and compiles it to a
//!   Vega-Lite document with inline data.
//! - [`generation`] turns natural-language goals and revision instructions
//!   into validated specs through a pluggable [`generation::ModelProvider`],
//!   with a deterministic rule-based generator as fallback.
//! - [`canvas`] is the freeform canvas document: notes, visualizations,
//!   provenance edges, lineage and versioned serialization.
//!
//! [`sample`] bundles a small country dataset.
//!
//! Runnable walkthroughs for each area live in this crate's `examples/`
//! directory.

pub mod canvas;
pub mod chart;
pub mod data;
pub mod generation;
mod ids;
pub mod sample;

pub use ids::{DatasetId, DocumentId, IdParseError};
