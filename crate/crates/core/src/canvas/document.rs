use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::chart::{validate_spec, ChartSpec, ValidationReport};
use crate::data::Dataset;
use crate::{DatasetId, DocumentId};

pub const NOTE_SIZE: Size = Size { w: 240.0, h: 80.0 };
pub const VISUALIZATION_SIZE: Size = Size { w: 400.0, h: 300.0 };
/// Vertical gap between a note and a chart generated from it.
pub const NOTE_CHART_GAP: f64 = 16.0;
/// Horizontal gap between a chart and a revision of it.
pub const REVISION_GAP: f64 = 24.0;
pub const DUPLICATE_OFFSET: Point = Point { x: 24.0, y: 24.0 };

/// Node identifier, allocated sequentially per document; ordering follows
/// creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Size {
    pub w: f64,
    pub h: f64,
}

impl Size {
    pub fn new(w: f64, h: f64) -> Self {
        Self { w, h }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeContent {
    Note {
        text: String,
    },
    Visualization {
        spec: ChartSpec,
        /// Cache key of the compiled payload: the spec's content hash.
        payload_ref: String,
    },
}

impl NodeContent {
    pub fn visualization(spec: ChartSpec) -> Self {
        let payload_ref = spec.content_hash();
        NodeContent::Visualization { spec, payload_ref }
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            NodeContent::Note { .. } => NodeKind::Note,
            NodeContent::Visualization { .. } => NodeKind::Visualization,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Note,
    Visualization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasNode {
    pub id: NodeId,
    pub position: Point,
    pub size: Size,
    pub z: i64,
    #[serde(default)]
    pub tombstone: bool,
    #[serde(flatten)]
    pub content: NodeContent,
}

impl CanvasNode {
    pub fn kind(&self) -> NodeKind {
        self.content.kind()
    }

    pub fn spec(&self) -> Option<&ChartSpec> {
        match &self.content {
            NodeContent::Visualization { spec, .. } => Some(spec),
            NodeContent::Note { .. } => None,
        }
    }

    pub fn is_live(&self) -> bool {
        !self.tombstone
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    DerivedFrom,
    DuplicatedFrom,
    GeneratedFromNote,
}

impl EdgeKind {
    /// Edge kinds that make up the lineage forest.
    pub fn is_lineage(self) -> bool {
        matches!(self, EdgeKind::DerivedFrom | EdgeKind::DuplicatedFrom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CanvasError {
    #[error("note text is empty")]
    InvalidText,
    #[error("source node {0} does not exist or is deleted")]
    UnknownSourceNode(NodeId),
    #[error("{kind:?} edges cannot start at a {source_kind:?} node")]
    InvalidEdgeKind { kind: EdgeKind, source_kind: NodeKind },
    #[error("spec does not validate: {0}")]
    InvalidSpec(ValidationReport),
    #[error("document belongs to dataset {expected}, got {found}")]
    DatasetMismatch { expected: DatasetId, found: DatasetId },
    #[error("node {0} does not exist or is deleted")]
    UnknownNode(NodeId),
    #[error("size must be positive and finite")]
    NonPositiveSize,
    #[error("position must be finite")]
    NonFinitePosition,
    #[error("node {0} is not a visualization")]
    NotAVisualization(NodeId),
    #[error("node {0} is not a note")]
    NotANote(NodeId),
}

impl CanvasError {
    pub fn code(&self) -> &'static str {
        match self {
            CanvasError::InvalidText => "InvalidText",
            CanvasError::UnknownSourceNode(_) => "UnknownSourceNode",
            CanvasError::InvalidEdgeKind { .. } => "InvalidEdgeKind",
            CanvasError::InvalidSpec(_) => "InvalidSpec",
            CanvasError::DatasetMismatch { .. } => "DatasetMismatch",
            CanvasError::UnknownNode(_) => "UnknownNode",
            CanvasError::NonPositiveSize => "NonPositiveSize",
            CanvasError::NonFinitePosition => "NonFinitePosition",
            CanvasError::NotAVisualization(_) => "NotAVisualization",
            CanvasError::NotANote(_) => "NotANote",
        }
    }
}

/// Where a new visualization comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Source {
    pub node: NodeId,
    pub kind: EdgeKind,
}

/// A freeform canvas over one dataset.
///
/// Every mutating operation increments `doc_version` by one. Live nodes
/// have distinct `z`; new and moved nodes go on top. Deleted nodes stay as
/// tombstones so lineage survives. Each node has at most one lineage
/// parent.
#[derive(Debug, Clone, PartialEq)]
pub struct CanvasDocument {
    pub(super) id: DocumentId,
    pub(super) dataset_id: DatasetId,
    pub(super) nodes: BTreeMap<NodeId, CanvasNode>,
    pub(super) edges: Vec<ProvenanceEdge>,
    pub(super) next_z: i64,
    pub(super) next_node_id: u64,
    pub(super) doc_version: u64,
}

fn check_position(p: Point) -> Result<Point, CanvasError> {
    if p.x.is_finite() && p.y.is_finite() {
        Ok(p)
    } else {
        Err(CanvasError::NonFinitePosition)
    }
}

fn check_size(s: Size) -> Result<Size, CanvasError> {
    if s.w.is_finite() && s.h.is_finite() && s.w > 0.0 && s.h > 0.0 {
        Ok(s)
    } else {
        Err(CanvasError::NonPositiveSize)
    }
}

impl CanvasDocument {
    pub fn new(dataset_id: DatasetId) -> Self {
        Self::with_id(DocumentId::new(), dataset_id)
    }

    pub fn with_id(id: DocumentId, dataset_id: DatasetId) -> Self {
        Self { id, dataset_id, nodes: BTreeMap::new(), edges: Vec::new(), next_z: 0, next_node_id: 1, doc_version: 0 }
    }

    pub fn id(&self) -> DocumentId {
        self.id
    }

    pub fn dataset_id(&self) -> DatasetId {
        self.dataset_id
    }

    pub fn doc_version(&self) -> u64 {
        self.doc_version
    }

    pub fn next_z(&self) -> i64 {
        self.next_z
    }

    /// All nodes, tombstones included, by id.
    pub fn nodes(&self) -> impl Iterator<Item = &CanvasNode> {
        self.nodes.values()
    }

    /// Live nodes in paint order (lowest z first).
    pub fn live_nodes(&self) -> Vec<&CanvasNode> {
        let mut live: Vec<&CanvasNode> = self.nodes.values().filter(|n| n.is_live()).collect();
        live.sort_by_key(|n| n.z);
        live
    }

    pub fn edges(&self) -> &[ProvenanceEdge] {
        &self.edges
    }

    /// Any node, live or tombstoned.
    pub fn node(&self, id: NodeId) -> Option<&CanvasNode> {
        self.nodes.get(&id)
    }

    fn live(&self, id: NodeId) -> Result<&CanvasNode, CanvasError> {
        self.nodes.get(&id).filter(|n| n.is_live()).ok_or(CanvasError::UnknownNode(id))
    }

    fn live_mut(&mut self, id: NodeId) -> Result<&mut CanvasNode, CanvasError> {
        self.nodes.get_mut(&id).filter(|n| n.is_live()).ok_or(CanvasError::UnknownNode(id))
    }

    fn take_z(&mut self) -> i64 {
        let z = self.next_z;
        self.next_z += 1;
        z
    }

    fn insert(&mut self, position: Point, size: Size, content: NodeContent) -> NodeId {
        let id = NodeId(self.next_node_id);
        self.next_node_id += 1;
        let z = self.take_z();
        self.nodes.insert(id, CanvasNode { id, position, size, z, tombstone: false, content });
        id
    }

    fn bump(&mut self) -> u64 {
        self.doc_version += 1;
        self.doc_version
    }

    pub fn create_note(&mut self, position: Point, text: &str) -> Result<NodeId, CanvasError> {
        if text.trim().is_empty() {
            return Err(CanvasError::InvalidText);
        }
        let position = check_position(position)?;
        let id = self.insert(position, NOTE_SIZE, NodeContent::Note { text: text.to_string() });
        self.bump();
        Ok(id)
    }

    pub fn edit_note(&mut self, id: NodeId, text: &str) -> Result<u64, CanvasError> {
        if text.trim().is_empty() {
            return Err(CanvasError::InvalidText);
        }
        match &mut self.live_mut(id)?.content {
            NodeContent::Note { text: t } => *t = text.to_string(),
            NodeContent::Visualization { .. } => return Err(CanvasError::NotANote(id)),
        }
        Ok(self.bump())
    }

    /// Default spot for a chart made from `source`: below a note, to the
    /// right of a revised chart, offset from a duplicated one.
    pub fn default_position(&self, source: Source) -> Result<Point, CanvasError> {
        let n = self.live(source.node).map_err(|_| CanvasError::UnknownSourceNode(source.node))?;
        let p = n.position;
        Ok(match source.kind {
            EdgeKind::GeneratedFromNote => Point::new(p.x, p.y + n.size.h + NOTE_CHART_GAP),
            EdgeKind::DerivedFrom => Point::new(p.x + n.size.w + REVISION_GAP, p.y),
            EdgeKind::DuplicatedFrom => Point::new(p.x + DUPLICATE_OFFSET.x, p.y + DUPLICATE_OFFSET.y),
        })
    }

    /// Adds a chart node, validating `spec` against `dataset`. Without a
    /// position the node is placed by [`default_position`](Self::default_position),
    /// or at the origin when there is no source.
    pub fn create_visualization(
        &mut self,
        position: Option<Point>,
        spec: ChartSpec,
        source: Option<Source>,
        dataset: &Dataset,
    ) -> Result<NodeId, CanvasError> {
        if dataset.id() != self.dataset_id {
            return Err(CanvasError::DatasetMismatch { expected: self.dataset_id, found: dataset.id() });
        }
        if let Some(src) = source {
            let kind = self.live(src.node).map_err(|_| CanvasError::UnknownSourceNode(src.node))?.kind();
            let fits = match src.kind {
                EdgeKind::GeneratedFromNote => kind == NodeKind::Note,
                EdgeKind::DerivedFrom | EdgeKind::DuplicatedFrom => kind == NodeKind::Visualization,
            };
            if !fits {
                return Err(CanvasError::InvalidEdgeKind { kind: src.kind, source_kind: kind });
            }
        }
        let report = validate_spec(&spec, dataset);
        if !report.valid {
            return Err(CanvasError::InvalidSpec(report));
        }
        let position = match (position, source) {
            (Some(p), _) => check_position(p)?,
            (None, Some(src)) => self.default_position(src)?,
            (None, None) => Point::default(),
        };
        let id = self.insert(position, VISUALIZATION_SIZE, NodeContent::visualization(spec));
        if let Some(src) = source {
            self.edges.push(ProvenanceEdge { from: src.node, to: id, kind: src.kind, created_at: Utc::now() });
        }
        self.bump();
        Ok(id)
    }

    /// Moves a node and raises it to the top.
    pub fn move_node(&mut self, id: NodeId, position: Point) -> Result<u64, CanvasError> {
        let position = check_position(position)?;
        self.live(id)?;
        let z = self.take_z();
        let node = self.live_mut(id)?;
        node.position = position;
        node.z = z;
        Ok(self.bump())
    }

    pub fn resize_node(&mut self, id: NodeId, size: Size) -> Result<u64, CanvasError> {
        let size = check_size(size)?;
        self.live_mut(id)?.size = size;
        Ok(self.bump())
    }

    /// Copies a live visualization with a [`DUPLICATE_OFFSET`] and records a
    /// duplicated-from edge.
    pub fn duplicate_node(&mut self, id: NodeId) -> Result<NodeId, CanvasError> {
        let original = self.live(id)?;
        if original.kind() != NodeKind::Visualization {
            return Err(CanvasError::NotAVisualization(id));
        }
        let (content, size) = (original.content.clone(), original.size);
        let position = self.default_position(Source { node: id, kind: EdgeKind::DuplicatedFrom })?;
        let copy = self.insert(position, size, content);
        self.edges.push(ProvenanceEdge { from: id, to: copy, kind: EdgeKind::DuplicatedFrom, created_at: Utc::now() });
        self.bump();
        Ok(copy)
    }

    /// Tombstones a node; its content and edges are kept.
    pub fn delete_node(&mut self, id: NodeId) -> Result<u64, CanvasError> {
        self.live_mut(id)?.tombstone = true;
        Ok(self.bump())
    }

    /// Lineage ancestors of `id`, nearest first, following derived-from and
    /// duplicated-from edges. Tombstoned ancestors are included.
    pub fn lineage(&self, id: NodeId) -> Result<Vec<NodeId>, CanvasError> {
        if !self.nodes.contains_key(&id) {
            return Err(CanvasError::UnknownNode(id));
        }
        let parents = self.lineage_parents();
        let mut chain = Vec::new();
        let mut seen = HashSet::from([id]);
        let mut cur = id;
        while let Some(&p) = parents.get(&cur) {
            if !seen.insert(p) {
                break;
            }
            chain.push(p);
            cur = p;
        }
        Ok(chain)
    }

    fn lineage_parents(&self) -> HashMap<NodeId, NodeId> {
        self.edges.iter().filter(|e| e.kind.is_lineage()).map(|e| (e.to, e.from)).collect()
    }

    /// Edges touching `id` in either direction.
    pub fn edges_of(&self, id: NodeId) -> impl Iterator<Item = &ProvenanceEdge> {
        self.edges.iter().filter(move |e| e.from == id || e.to == id)
    }

    /// Checks the structural invariants; used after deserialization.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (key, node) in &self.nodes {
            if *key != node.id {
                return Err(format!("node stored under {key} has id {}", node.id));
            }
            if node.id.0 == 0 || node.id.0 >= self.next_node_id {
                return Err(format!("node id {} is outside the allocated range", node.id));
            }
            check_size(node.size).map_err(|_| format!("node {} has a non-positive size", node.id))?;
            check_position(node.position).map_err(|_| format!("node {} has a non-finite position", node.id))?;
            if node.z >= self.next_z {
                return Err(format!("node {} has z {} at or above next_z {}", node.id, node.z, self.next_z));
            }
            if let NodeContent::Visualization { spec, payload_ref } = &node.content {
                if *payload_ref != spec.content_hash() {
                    return Err(format!("node {} has a stale payload_ref", node.id));
                }
            }
        }
        let mut zs = HashSet::new();
        for n in self.nodes.values().filter(|n| n.is_live()) {
            if !zs.insert(n.z) {
                return Err(format!("z {} is shared by live nodes", n.z));
            }
        }
        let mut parent_of = HashMap::new();
        for e in &self.edges {
            if e.from == e.to {
                return Err(format!("edge from node {} to itself", e.from));
            }
            for end in [e.from, e.to] {
                if !self.nodes.contains_key(&end) {
                    return Err(format!("edge endpoint {end} is not a node"));
                }
            }
            if e.kind.is_lineage() && parent_of.insert(e.to, e.from).is_some() {
                return Err(format!("node {} has two lineage parents", e.to));
            }
        }
        for &start in parent_of.keys() {
            let mut seen = HashSet::from([start]);
            let mut cur = start;
            while let Some(&p) = parent_of.get(&cur) {
                if !seen.insert(p) {
                    return Err(format!("lineage cycle through node {p}"));
                }
                cur = p;
            }
        }
        Ok(())
    }
}
