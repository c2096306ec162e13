//! In-memory knowledge graph: identifier-keyed nodes with typed string
//! features and label-addressed adjacency lists.
//!
//! The graph is loaded once from a canonical JSON document and is immutable
//! afterwards, so it can be shared freely across concurrent episodes.
//!
//! Canonical file shape:
//!
//! ```json
//! {
//!   "nodes": { "1047566": { "features": { "title": "Hand in Glove" } } },
//!   "edges": { "203088": { "also-bought-item": ["203010"] } }
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Opaque node identifier. Non-empty, compared by exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(value: impl Into<String>) -> Result<Self, GraphError> {
        let value = value.into();
        if value.is_empty() {
            return Err(GraphError::EmptyNodeId);
        }
        Ok(NodeId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Edge label such as `also-bought-item` or `Compound-treats-Disease`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeLabel(String);

impl EdgeLabel {
    pub fn new(value: impl Into<String>) -> Result<Self, GraphError> {
        let value = value.into();
        if value.is_empty() {
            return Err(GraphError::EmptyEdgeLabel);
        }
        Ok(EdgeLabel(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Feature-type name to feature value. Values may be empty strings;
/// an empty value is a stored datum, not a miss.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureMap {
    entries: BTreeMap<String, String>,
}

impl FeatureMap {
    pub fn get(&self, feature: &str) -> Option<&str> {
        self.entries.get(feature).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Feature-type names and edge labels observed at load time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphSchema {
    pub feature_types: BTreeSet<String>,
    pub edge_labels: BTreeSet<String>,
}

/// Why a lookup returned no value. Misses are ordinary values; the action
/// layer turns them into advisory observations instead of failing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupMiss {
    UnknownNode,
    UnknownFeature,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("failed to read graph file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed graph file {path}: {source}")]
    Malformed {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("node identifier must be non-empty")]
    EmptyNodeId,
    #[error("edge label must be non-empty")]
    EmptyEdgeLabel,
    #[error("edge label for node {0} must be non-empty")]
    EmptyEdgeLabelFor(String),
    #[error("neighbor entry under ({source_id}, {label}) must be non-empty")]
    EmptyNeighbor { source_id: String, label: String },
    #[error("{}", render_dangling(.0))]
    DanglingEdges(Vec<DanglingEdge>),
}

/// An adjacency entry whose target id is not a node in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingEdge {
    pub source: String,
    pub label: String,
    pub target: String,
}

fn render_dangling(edges: &[DanglingEdge]) -> String {
    let mut out = format!("graph references {} unknown node(s):", edges.len());
    for e in edges.iter().take(5) {
        out.push_str(&format!(" ({}, {}, {})", e.source, e.label, e.target));
    }
    if edges.len() > 5 {
        out.push_str(&format!(" ... and {} more", edges.len() - 5));
    }
    out
}

#[derive(Deserialize)]
struct RawGraphFile {
    #[serde(default)]
    nodes: BTreeMap<String, RawNode>,
    #[serde(default)]
    edges: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

#[derive(Deserialize)]
struct RawNode {
    #[serde(default)]
    features: BTreeMap<String, String>,
}

/// Read-only knowledge graph. All query methods are side-effect free.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, FeatureMap>,
    adjacency: BTreeMap<(NodeId, EdgeLabel), Vec<NodeId>>,
    schema: GraphSchema,
    warnings: Vec<String>,
}

impl KnowledgeGraph {
    /// Loads and validates a graph from the canonical JSON file format.
    ///
    /// Duplicate neighbors are deduplicated keeping the first occurrence,
    /// recorded as a warning. Any adjacency target missing from `nodes`
    /// fails the load.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|err| match err {
            GraphError::Malformed { source, .. } => GraphError::Malformed {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    /// Parses a graph from canonical JSON text. See [`KnowledgeGraph::load`].
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let raw: RawGraphFile =
            serde_json::from_str(text).map_err(|source| GraphError::Malformed {
                path: "<inline>".to_string(),
                source,
            })?;

        let mut nodes = BTreeMap::new();
        let mut schema = GraphSchema::default();
        for (id, node) in raw.nodes {
            let id = NodeId::new(id)?;
            for name in node.features.keys() {
                schema.feature_types.insert(name.clone());
            }
            nodes.insert(
                id,
                FeatureMap {
                    entries: node.features,
                },
            );
        }

        let mut adjacency = BTreeMap::new();
        let mut warnings = Vec::new();
        let mut dangling = Vec::new();
        for (source_id, by_label) in raw.edges {
            let source = NodeId::new(source_id.clone())?;
            if !nodes.contains_key(&source) {
                // An edge block for an undeclared node is itself dangling.
                for (label, targets) in &by_label {
                    for target in targets {
                        dangling.push(DanglingEdge {
                            source: source_id.clone(),
                            label: label.clone(),
                            target: target.clone(),
                        });
                    }
                }
                continue;
            }
            for (label, targets) in by_label {
                if label.is_empty() {
                    return Err(GraphError::EmptyEdgeLabelFor(source_id));
                }
                let label = EdgeLabel::new(label)?;
                schema.edge_labels.insert(label.as_str().to_string());
                let mut seen = HashSet::new();
                let mut list = Vec::with_capacity(targets.len());
                for target in targets {
                    if target.is_empty() {
                        return Err(GraphError::EmptyNeighbor {
                            source_id: source.as_str().to_string(),
                            label: label.as_str().to_string(),
                        });
                    }
                    let target = NodeId(target);
                    if !nodes.contains_key(&target) {
                        dangling.push(DanglingEdge {
                            source: source.as_str().to_string(),
                            label: label.as_str().to_string(),
                            target: target.as_str().to_string(),
                        });
                        continue;
                    }
                    if seen.insert(target.clone()) {
                        list.push(target);
                    } else {
                        warnings.push(format!(
                            "duplicate neighbor {} under ({}, {}) dropped; first occurrence kept",
                            target, source, label
                        ));
                    }
                }
                adjacency.insert((source.clone(), label), list);
            }
        }

        if !dangling.is_empty() {
            return Err(GraphError::DanglingEdges(dangling));
        }

        for w in &warnings {
            log::warn!("{w}");
        }

        Ok(KnowledgeGraph {
            nodes,
            adjacency,
            schema,
            warnings,
        })
    }

    /// Feature value for `(node, feature)`. Distinguishes an unknown node
    /// from a known node lacking the feature. Empty stored values are hits.
    pub fn get_feature(&self, node: &str, feature: &str) -> Result<&str, LookupMiss> {
        let features = self
            .nodes
            .get(&NodeId(node.to_string()))
            .ok_or(LookupMiss::UnknownNode)?;
        features.get(feature).ok_or(LookupMiss::UnknownFeature)
    }

    /// Neighbors of `node` under `label`, in source-file order. A known node
    /// with no such edges yields an empty slice; an unknown node is a miss.
    pub fn get_neighbours(&self, node: &str, label: &str) -> Result<&[NodeId], LookupMiss> {
        let id = NodeId(node.to_string());
        if !self.nodes.contains_key(&id) {
            return Err(LookupMiss::UnknownNode);
        }
        Ok(self
            .adjacency
            .get(&(id, EdgeLabel(label.to_string())))
            .map(Vec::as_slice)
            .unwrap_or(&[]))
    }

    /// Count of neighbors of `node` under `label`. Always equals the length
    /// of [`KnowledgeGraph::get_neighbours`] for the same arguments.
    pub fn get_degree(&self, node: &str, label: &str) -> Result<usize, LookupMiss> {
        self.get_neighbours(node, label).map(<[NodeId]>::len)
    }

    pub fn contains_node(&self, node: &str) -> bool {
        self.nodes.contains_key(&NodeId(node.to_string()))
    }

    /// Nodes in identifier order.
    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, &FeatureMap)> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Total adjacency entries across all `(node, label)` keys.
    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum()
    }

    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    /// Non-fatal findings from load, e.g. dropped duplicate neighbors.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}
