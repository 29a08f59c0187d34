//! Embedded property graph for the news knowledge graph.
//!
//! Five node labels and four typed, directed edges. Nodes are unique per
//! `(label, key)`; merges overwrite non-key properties (last write wins)
//! and edges are idempotent. An article belongs to exactly one resort.

mod shared;
pub mod snapshot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::fold_key;

pub use shared::SharedGraph;

pub type Properties = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    Article,
    Resort,
    Tag,
    Entity,
    EntityClass,
}

impl NodeLabel {
    pub const ALL: [NodeLabel; 5] = [
        NodeLabel::Article,
        NodeLabel::Resort,
        NodeLabel::Tag,
        NodeLabel::Entity,
        NodeLabel::EntityClass,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Article => "Article",
            NodeLabel::Resort => "Resort",
            NodeLabel::Tag => "Tag",
            NodeLabel::Entity => "Entity",
            NodeLabel::EntityClass => "EntityClass",
        }
    }

    /// Labels whose keys are case-folded names.
    fn folds_key(self) -> bool {
        matches!(self, NodeLabel::Resort | NodeLabel::Tag | NodeLabel::EntityClass)
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeLabel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        NodeLabel::ALL.into_iter().find(|l| l.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeType {
    HasTag,
    PartOf,
    Mentions,
    InstanceOf,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] = [
        EdgeType::HasTag,
        EdgeType::PartOf,
        EdgeType::Mentions,
        EdgeType::InstanceOf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::HasTag => "HAS_TAG",
            EdgeType::PartOf => "PART_OF",
            EdgeType::Mentions => "MENTIONS",
            EdgeType::InstanceOf => "INSTANCE_OF",
        }
    }

    /// `(start label, end label)` allowed for this edge type.
    pub fn endpoints(self) -> (NodeLabel, NodeLabel) {
        match self {
            EdgeType::HasTag => (NodeLabel::Article, NodeLabel::Tag),
            EdgeType::PartOf => (NodeLabel::Article, NodeLabel::Resort),
            EdgeType::Mentions => (NodeLabel::Article, NodeLabel::Entity),
            EdgeType::InstanceOf => (NodeLabel::Entity, NodeLabel::EntityClass),
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        EdgeType::ALL.into_iter().find(|t| t.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Out,
    In,
}

/// Opaque handle to a node, valid for the store that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub edge_type: EdgeType,
    pub dst: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub label: NodeLabel,
    pub key: String,
    pub props: Properties,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid {label} key {key:?}: {reason}")]
    InvalidKey { label: NodeLabel, key: String, reason: &'static str },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("article {article} is already part of resort {existing}, cannot add {attempted}")]
    SingleResortViolation { article: String, existing: String, attempted: String },
    #[error("dangling node handle {0:?}")]
    DanglingHandle(NodeId),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("graph store unavailable")]
    StoreUnavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: BTreeMap<NodeLabel, usize>,
    pub edges: BTreeMap<EdgeType, usize>,
}

impl GraphStats {
    pub fn node_count(&self, label: NodeLabel) -> usize {
        self.nodes.get(&label).copied().unwrap_or(0)
    }

    pub fn edge_count(&self, edge_type: EdgeType) -> usize {
        self.edges.get(&edge_type).copied().unwrap_or(0)
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.values().sum()
    }
}

enum Undo {
    NodeCreated,
    PropsReplaced(NodeId, Properties),
    EdgeCreated(Edge),
}

/// In-memory property graph. Wrap it in [`SharedGraph`] for concurrent use.
#[derive(Default)]
pub struct GraphStore {
    nodes: Vec<Node>,
    index: HashMap<(NodeLabel, String), NodeId>,
    out: HashMap<(NodeId, EdgeType), BTreeSet<NodeId>>,
    incoming: HashMap<(NodeId, EdgeType), BTreeSet<NodeId>>,
    edge_counts: BTreeMap<EdgeType, usize>,
    journal: Option<Vec<Undo>>,
}

impl fmt::Debug for GraphStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphStore").field("stats", &self.stats()).finish()
    }
}

/// Normalizes a key for `label`, rejecting empty or malformed ones.
pub fn normalize_key(label: NodeLabel, key: &str) -> Result<String, GraphError> {
    let invalid = |reason| GraphError::InvalidKey { label, key: key.to_string(), reason };
    let trimmed = key.trim();
    if trimmed.is_empty() {
        return Err(invalid("empty key"));
    }
    match label {
        NodeLabel::Entity => {
            let digits = trimmed.strip_prefix('Q').ok_or_else(|| invalid("expected Q[0-9]+"))?;
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(invalid("expected Q[0-9]+"));
            }
            Ok(trimmed.to_string())
        }
        l if l.folds_key() => Ok(fold_key(trimmed)),
        _ => Ok(trimmed.to_string()),
    }
}

/// Canonical UTC rendering used for article dates, so string order is time order.
pub fn canonical_date(raw: &str) -> Option<String> {
    DateTime::parse_from_rfc3339(raw.trim())
        .ok()
        .map(|d| d.with_timezone(&Utc).to_rfc3339_opts(SecondsFormat::Secs, true))
}

fn validate_props(label: NodeLabel, key: &str, mut props: Properties) -> Result<Properties, GraphError> {
    let (required, optional): (&[&str], &[&str]) = match label {
        NodeLabel::Article => (&["date", "title"], &["opening_paragraph", "body", "source_id"]),
        NodeLabel::Resort | NodeLabel::Tag | NodeLabel::EntityClass => (&[], &["display_name"]),
        NodeLabel::Entity => (&["name", "url"], &["name_key"]),
    };
    if let Some(unknown) = props
        .keys()
        .find(|k| !required.contains(&k.as_str()) && !optional.contains(&k.as_str()))
    {
        return Err(GraphError::SchemaViolation(format!("{label} has no property {unknown:?}")));
    }
    for name in required {
        match props.get(*name) {
            Some(v) if !v.trim().is_empty() => {}
            _ => {
                return Err(GraphError::SchemaViolation(format!("{label} requires non-empty {name:?}")))
            }
        }
    }
    match label {
        NodeLabel::Article => {
            let date = canonical_date(&props["date"])
                .ok_or_else(|| GraphError::SchemaViolation(format!("unparseable date {:?}", props["date"])))?;
            props.insert("date".into(), date);
        }
        NodeLabel::Entity => {
            url::Url::parse(&props["url"])
                .map_err(|e| GraphError::SchemaViolation(format!("entity url {:?}: {e}", props["url"])))?;
            let name_key = fold_key(&props["name"]);
            props.insert("name_key".into(), name_key);
        }
        _ => {
            props
                .entry("display_name".into())
                .or_insert_with(|| key.trim().to_string());
        }
    }
    Ok(props)
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates the node `(label, key)` or overwrites the properties of the
    /// existing one. Returns the node's handle either way.
    pub fn merge_node(&mut self, label: NodeLabel, key: &str, props: Properties) -> Result<NodeId, GraphError> {
        let normalized = normalize_key(label, key)?;
        let props = validate_props(label, key, props)?;
        if let Some(&id) = self.index.get(&(label, normalized.clone())) {
            let old = std::mem::replace(&mut self.nodes[id.index()].props, props);
            self.record(Undo::PropsReplaced(id, old));
            return Ok(id);
        }
        let id = NodeId(u32::try_from(self.nodes.len()).expect("node count exceeds u32"));
        self.nodes.push(Node { label, key: normalized.clone(), props });
        self.index.insert((label, normalized), id);
        self.record(Undo::NodeCreated);
        Ok(id)
    }

    /// Links `src` to `dst`. Repeated calls return the same edge.
    pub fn merge_edge(&mut self, src: NodeId, edge_type: EdgeType, dst: NodeId) -> Result<Edge, GraphError> {
        let src_node = self.node(src).ok_or(GraphError::DanglingHandle(src))?;
        let dst_node = self.node(dst).ok_or(GraphError::DanglingHandle(dst))?;
        let (from, to) = edge_type.endpoints();
        if src_node.label != from || dst_node.label != to {
            return Err(GraphError::SchemaViolation(format!(
                "{edge_type} must go {from}->{to}, got {}->{}",
                src_node.label, dst_node.label
            )));
        }
        let edge = Edge { src, edge_type, dst };
        let targets = self.out.get(&(src, edge_type));
        if targets.is_some_and(|t| t.contains(&dst)) {
            return Ok(edge);
        }
        if edge_type == EdgeType::PartOf {
            if let Some(existing) = targets.and_then(|t| t.iter().next()) {
                return Err(GraphError::SingleResortViolation {
                    article: src_node.key.clone(),
                    existing: self.nodes[existing.index()].key.clone(),
                    attempted: dst_node.key.clone(),
                });
            }
        }
        self.out.entry((src, edge_type)).or_default().insert(dst);
        self.incoming.entry((dst, edge_type)).or_default().insert(src);
        *self.edge_counts.entry(edge_type).or_default() += 1;
        self.record(Undo::EdgeCreated(edge));
        Ok(edge)
    }

    /// Adjacent nodes over `edge_type` in `direction`, ordered by key.
    pub fn neighbors(&self, node: NodeId, edge_type: EdgeType, direction: Direction) -> Result<Vec<NodeId>, GraphError> {
        self.node(node).ok_or(GraphError::DanglingHandle(node))?;
        let mut ids: Vec<NodeId> = self.adjacent(node, edge_type, direction).collect();
        ids.sort_by(|a, b| self.nodes[a.index()].key.cmp(&self.nodes[b.index()].key));
        Ok(ids)
    }

    /// Unordered adjacency, for hot loops that sort afterwards anyway.
    pub fn adjacent(&self, node: NodeId, edge_type: EdgeType, direction: Direction) -> impl Iterator<Item = NodeId> + '_ {
        let map = match direction {
            Direction::Out => &self.out,
            Direction::In => &self.incoming,
        };
        map.get(&(node, edge_type)).into_iter().flatten().copied()
    }

    pub fn has_edge(&self, src: NodeId, edge_type: EdgeType, dst: NodeId) -> bool {
        self.out.get(&(src, edge_type)).is_some_and(|t| t.contains(&dst))
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn find(&self, label: NodeLabel, key: &str) -> Option<NodeId> {
        let key = normalize_key(label, key).ok()?;
        self.index.get(&(label, key)).copied()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(|i| NodeId(i as u32))
    }

    /// Nodes with `label`, ordered by key.
    pub fn nodes_with_label(&self, label: NodeLabel) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.node_ids().filter(|id| self.nodes[id.index()].label == label).collect();
        ids.sort_by(|a, b| self.nodes[a.index()].key.cmp(&self.nodes[b.index()].key));
        ids
    }

    /// Every edge, ordered by (type, source key, target key).
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self
            .out
            .iter()
            .flat_map(|(&(src, edge_type), dsts)| dsts.iter().map(move |&dst| Edge { src, edge_type, dst }))
            .collect();
        edges.sort_by(|a, b| {
            (a.edge_type, &self.nodes[a.src.index()].key, &self.nodes[a.dst.index()].key).cmp(&(
                b.edge_type,
                &self.nodes[b.src.index()].key,
                &self.nodes[b.dst.index()].key,
            ))
        });
        edges
    }

    pub fn stats(&self) -> GraphStats {
        let mut nodes: BTreeMap<NodeLabel, usize> = NodeLabel::ALL.iter().map(|&l| (l, 0)).collect();
        for node in &self.nodes {
            *nodes.entry(node.label).or_default() += 1;
        }
        let edges = EdgeType::ALL
            .iter()
            .map(|&t| (t, self.edge_counts.get(&t).copied().unwrap_or(0)))
            .collect();
        GraphStats { nodes, edges }
    }

    /// Runs `f` as one batch: if it fails, every change it made is undone.
    pub fn transaction<T, E>(&mut self, f: impl FnOnce(&mut GraphStore) -> Result<T, E>) -> Result<T, E> {
        debug_assert!(self.journal.is_none(), "nested transaction");
        self.journal = Some(Vec::new());
        let result = f(self);
        let journal = self.journal.take().unwrap_or_default();
        if result.is_err() {
            for undo in journal.into_iter().rev() {
                self.undo(undo);
            }
        }
        result
    }

    fn record(&mut self, undo: Undo) {
        if let Some(journal) = self.journal.as_mut() {
            journal.push(undo);
        }
    }

    fn undo(&mut self, undo: Undo) {
        match undo {
            Undo::NodeCreated => {
                if let Some(node) = self.nodes.pop() {
                    self.index.remove(&(node.label, node.key));
                }
            }
            Undo::PropsReplaced(id, props) => self.nodes[id.index()].props = props,
            Undo::EdgeCreated(Edge { src, edge_type, dst }) => {
                let remove = |map: &mut HashMap<(NodeId, EdgeType), BTreeSet<NodeId>>, k, v| {
                    if let Some(set) = map.get_mut(&k) {
                        set.remove(&v);
                        if set.is_empty() {
                            map.remove(&k);
                        }
                    }
                };
                remove(&mut self.out, (src, edge_type), dst);
                remove(&mut self.incoming, (dst, edge_type), src);
                if let Some(c) = self.edge_counts.get_mut(&edge_type) {
                    *c -= 1;
                }
            }
        }
    }
}
