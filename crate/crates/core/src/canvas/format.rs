use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::document::{CanvasDocument, CanvasNode, ProvenanceEdge};
use crate::{DatasetId, DocumentId};

/// Version written by [`CanvasDocument::to_json`].
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("unsupported canvas format_version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("malformed canvas document: {0}")]
    MalformedDocument(String),
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::UnsupportedVersion(_) => "UnsupportedVersion",
            FormatError::MalformedDocument(_) => "MalformedDocument",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentV1 {
    format_version: u32,
    id: DocumentId,
    dataset_id: DatasetId,
    doc_version: u64,
    next_z: i64,
    next_node_id: u64,
    nodes: Vec<CanvasNode>,
    edges: Vec<ProvenanceEdge>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u64>,
}

impl Serialize for CanvasDocument {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DocumentV1 {
            format_version: FORMAT_VERSION,
            id: self.id,
            dataset_id: self.dataset_id,
            doc_version: self.doc_version,
            next_z: self.next_z,
            next_node_id: self.next_node_id,
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.clone(),
        }
        .serialize(serializer)
    }
}

impl CanvasDocument {
    /// Versioned JSON; nodes are listed by id.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("canvas document serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("canvas document serializes")
    }

    /// Reads a document written by [`to_json`](Self::to_json), checking the
    /// format version first and the document invariants last.
    pub fn from_json(json: &str) -> Result<Self, FormatError> {
        let probe: VersionProbe =
            serde_json::from_str(json).map_err(|e| FormatError::MalformedDocument(e.to_string()))?;
        match probe.format_version {
            None => return Err(FormatError::MalformedDocument("missing format_version".into())),
            Some(v) if v != u64::from(FORMAT_VERSION) => return Err(FormatError::UnsupportedVersion(v)),
            Some(_) => {}
        }
        let raw: DocumentV1 = serde_json::from_str(json).map_err(|e| FormatError::MalformedDocument(e.to_string()))?;
        let mut nodes = BTreeMap::new();
        for node in raw.nodes {
            let id = node.id;
            if nodes.insert(id, node).is_some() {
                return Err(FormatError::MalformedDocument(format!("node {id} appears twice")));
            }
        }
        let doc = CanvasDocument {
            id: raw.id,
            dataset_id: raw.dataset_id,
            nodes,
            edges: raw.edges,
            next_z: raw.next_z,
            next_node_id: raw.next_node_id,
            doc_version: raw.doc_version,
        };
        doc.check_invariants().map_err(FormatError::MalformedDocument)?;
        Ok(doc)
    }
}
