//! The flat node-edge baseline representation.
//!
//! Encodes a tree as a list of node records plus explicit parent/child edge
//! records, with LINK edges materialized. Semantically equivalent to the
//! nested form (rebuilding the resolved DAG from the records reproduces the
//! graph index) but considerably more verbose, which is the point of the
//! representation comparison.

use serde::{Deserialize, Serialize};
use serde_json::ser::PrettyFormatter;

use crate::model::{FaultTree, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub parent: NodeId,
    pub child: NodeId,
}

/// The flat document: all nodes in document order, then all resolved edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEdgeDoc {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl NodeEdgeDoc {
    /// Serialize with the same formatting the nested form uses, so length
    /// comparisons are apples to apples.
    pub fn serialize(&self) -> String {
        let mut buf = Vec::new();
        let formatter = PrettyFormatter::with_indent(b" ");
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
        serde::Serialize::serialize(self, &mut ser).expect("in-memory serialization");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Resolved child lists keyed by parent, in edge order.
    pub fn children_map(&self) -> std::collections::BTreeMap<NodeId, Vec<NodeId>> {
        let mut map: std::collections::BTreeMap<NodeId, Vec<NodeId>> = self
            .nodes
            .iter()
            .map(|n| (n.id.clone(), Vec::new()))
            .collect();
        for edge in &self.edges {
            map.entry(edge.parent.clone())
                .or_default()
                .push(edge.child.clone());
        }
        map
    }
}

/// Convert a tree to the node-edge form. Nesting edges come first per node
/// in document order; a LINK contributes one edge to its target.
pub fn to_node_edge(tree: &FaultTree) -> NodeEdgeDoc {
    let mut nodes = Vec::with_capacity(tree.len());
    let mut edges = Vec::new();
    for node in tree.nodes() {
        nodes.push(NodeRecord {
            id: node.id.clone(),
            name: node.name.clone(),
            kind: node.kind.token().to_string(),
            solution_text: node.solution_text().map(str::to_string),
        });
        for child in tree.resolved_children(&node.id) {
            edges.push(EdgeRecord {
                parent: node.id.clone(),
                child,
            });
        }
    }
    NodeEdgeDoc { nodes, edges }
}

/// Serialized sizes of the two representations of one tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub jfta_chars: usize,
    pub node_edge_chars: usize,
    /// node-edge length over nested length; above 1 whenever the flat form
    /// is more verbose.
    pub ratio: f64,
}

/// Compare the serialized lengths of the nested and flat forms.
pub fn length_stats(tree: &FaultTree) -> LengthStats {
    let jfta_chars = tree.serialize().chars().count();
    let node_edge_chars = to_node_edge(tree).serialize().chars().count();
    LengthStats {
        jfta_chars,
        node_edge_chars,
        ratio: node_edge_chars as f64 / jfta_chars.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::graph::GraphIndex;
    use crate::model::parse_fault_tree;

    #[test]
    fn demo_tree_has_15_nodes_and_16_edges() {
        let tree = parse_fault_tree(demo::LIGHT_TREE).unwrap();
        let doc = to_node_edge(&tree);
        assert_eq!(doc.nodes.len(), 15);
        // 14 nesting edges plus the two link edges.
        assert_eq!(doc.edges.len(), 16);
        assert!(doc
            .edges
            .contains(&EdgeRecord { parent: NodeId::new("14"), child: NodeId::new("4") }));
        assert!(doc
            .edges
            .contains(&EdgeRecord { parent: NodeId::new("15"), child: NodeId::new("10") }));
    }

    #[test]
    fn one_node_tree_has_no_edges() {
        let tree = parse_fault_tree(
            r#"{"1": {"NodeName": "x", "NextType": "Solution", "NextTree": "fix"}}"#,
        )
        .unwrap();
        let doc = to_node_edge(&tree);
        assert_eq!(doc.nodes.len(), 1);
        assert!(doc.edges.is_empty());
    }

    #[test]
    fn rebuilt_children_match_the_graph_index() {
        let tree = parse_fault_tree(demo::LIGHT_TREE).unwrap();
        let index = GraphIndex::build(&tree);
        let rebuilt = to_node_edge(&tree).children_map();
        for node in tree.nodes() {
            assert_eq!(
                rebuilt.get(&node.id).map(Vec::as_slice).unwrap_or(&[]),
                index.children(&node.id),
                "children of {} diverge",
                node.id
            );
        }
    }

    #[test]
    fn flat_form_is_longer() {
        let tree = parse_fault_tree(demo::LIGHT_TREE).unwrap();
        let stats = length_stats(&tree);
        assert!(stats.ratio > 1.0, "ratio {}", stats.ratio);
    }
}
