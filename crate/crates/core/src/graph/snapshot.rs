//! Versioned JSON snapshots of a [`GraphStore`].
//!
//! Layout: `{version, checksum, nodes, edges}`. Nodes are sorted by
//! `(label, key)` and edges by `(type, src, dst)`, so identical stores
//! serialize to identical bytes. The checksum is the SHA-256 of the compact
//! JSON encoding of `[nodes, edges]`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EdgeType, GraphError, GraphStore, Node, NodeLabel};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotEdge {
    #[serde(rename = "type")]
    edge_type: EdgeType,
    src: String,
    dst: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotFile {
    version: u32,
    checksum: String,
    nodes: Vec<Node>,
    edges: Vec<SnapshotEdge>,
}

fn checksum(nodes: &[Node], edges: &[SnapshotEdge]) -> String {
    let body = serde_json::to_vec(&(nodes, edges)).expect("snapshot body serializes");
    hex::encode(Sha256::digest(&body))
}

pub fn to_bytes(store: &GraphStore) -> Vec<u8> {
    let mut nodes: Vec<Node> = store.node_ids().filter_map(|id| store.node(id).cloned()).collect();
    nodes.sort_by(|a, b| (a.label, &a.key).cmp(&(b.label, &b.key)));
    let key = |id| store.node(id).map(|n| n.key.clone()).unwrap_or_default();
    let edges: Vec<SnapshotEdge> = store
        .edges()
        .into_iter()
        .map(|e| SnapshotEdge { edge_type: e.edge_type, src: key(e.src), dst: key(e.dst) })
        .collect();
    let file = SnapshotFile { version: SNAPSHOT_VERSION, checksum: checksum(&nodes, &edges), nodes, edges };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("snapshot serializes");
    bytes.push(b'\n');
    bytes
}

pub fn from_bytes(bytes: &[u8]) -> Result<GraphStore, GraphError> {
    let corrupt = |msg: String| GraphError::CorruptSnapshot(msg);
    let file: SnapshotFile = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
    if file.version != SNAPSHOT_VERSION {
        return Err(corrupt(format!("unsupported version {}", file.version)));
    }
    if checksum(&file.nodes, &file.edges) != file.checksum {
        return Err(corrupt("checksum mismatch".into()));
    }
    let mut store = GraphStore::new();
    for node in file.nodes {
        let mut props = node.props;
        props.remove("name_key");
        store
            .merge_node(node.label, &node.key, props)
            .map_err(|e| corrupt(format!("node {}:{}: {e}", node.label, node.key)))?;
    }
    for edge in file.edges {
        let (from, to) = edge.edge_type.endpoints();
        let lookup = |label: NodeLabel, key: &str| {
            store
                .find(label, key)
                .ok_or_else(|| corrupt(format!("edge {} references missing {label} {key:?}", edge.edge_type)))
        };
        let src = lookup(from, &edge.src)?;
        let dst = lookup(to, &edge.dst)?;
        store
            .merge_edge(src, edge.edge_type, dst)
            .map_err(|e| corrupt(e.to_string()))?;
    }
    Ok(store)
}

pub fn save(store: &GraphStore, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, to_bytes(store))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<GraphStore, GraphError> {
    from_bytes(&std::fs::read(path)?)
}
