//! The freeform canvas: notes and charts with position, size and stacking
//! order, provenance edges between them, and a versioned JSON format.

mod document;
mod format;

pub use document::{
    CanvasDocument, CanvasError, CanvasNode, EdgeKind, NodeContent, NodeId, NodeKind, Point, ProvenanceEdge, Size,
    Source, DUPLICATE_OFFSET, NOTE_CHART_GAP, NOTE_SIZE, REVISION_GAP, VISUALIZATION_SIZE,
};
pub use format::{FormatError, FORMAT_VERSION};
