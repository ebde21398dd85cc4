//! Declarative chart specs: validation against a dataset, deterministic
//! repair, lowering to a [`ChartQuery`](crate::data::ChartQuery) and
//! compilation to a Vega-Lite document with inline data.

mod compile;
mod lower;
mod repair;
mod spec;
mod validate;

pub use compile::{compile_spec, escape_field, CompileError, RenderPayload, LABEL_FIELD, VEGA_LITE_SCHEMA};
pub use lower::{label_pass, spec_to_query, LabelPass, DEFAULT_BIN_COUNT};
pub use repair::{repair_spec, validate_and_repair, RepairError, MAX_REPAIR_PASSES};
pub use spec::{Channel, ChartSpec, Encoding, Mark, Scale, Transform, SPEC_VERSION};
pub use validate::{
    edit_distance, suggest_column, validate_spec, Issue, IssueCode, IssuePath, ValidationReport,
    MAX_SUGGESTION_DISTANCE,
};
