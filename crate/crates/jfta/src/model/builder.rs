//! Programmatic tree construction.
//!
//! Specs are plain nested values; [`FaultTree::build`] flattens one into the
//! id-indexed table with no validation, so defective shapes (duplicate ids,
//! solutions with children, dangling links) are expressible on purpose.

use indexmap::IndexMap;

use super::{FaultTree, Node, NodeId, NodeKind, Payload};

/// Payload of a [`NodeSpec`] prior to flattening.
#[derive(Debug, Clone)]
pub enum SpecPayload {
    Children(Vec<NodeSpec>),
    Solution(String),
    Link(NodeId),
}

/// A node description for [`FaultTree::build`].
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub payload: SpecPayload,
}

/// A gate node with nested children.
pub fn gate(
    id: impl Into<NodeId>,
    name: impl Into<String>,
    kind: NodeKind,
    children: Vec<NodeSpec>,
) -> NodeSpec {
    NodeSpec {
        id: id.into(),
        name: name.into(),
        kind,
        payload: SpecPayload::Children(children),
    }
}

/// A solution leaf.
pub fn solution(
    id: impl Into<NodeId>,
    name: impl Into<String>,
    text: impl Into<String>,
) -> NodeSpec {
    NodeSpec {
        id: id.into(),
        name: name.into(),
        kind: NodeKind::Solution,
        payload: SpecPayload::Solution(text.into()),
    }
}

/// A link node referencing `target`.
pub fn link(id: impl Into<NodeId>, name: impl Into<String>, target: impl Into<NodeId>) -> NodeSpec {
    NodeSpec {
        id: id.into(),
        name: name.into(),
        kind: NodeKind::Link,
        payload: SpecPayload::Link(target.into()),
    }
}

/// An arbitrary kind/payload combination, including invalid ones.
pub fn raw(
    id: impl Into<NodeId>,
    name: impl Into<String>,
    kind: NodeKind,
    payload: SpecPayload,
) -> NodeSpec {
    NodeSpec {
        id: id.into(),
        name: name.into(),
        kind,
        payload,
    }
}

pub(super) fn build_tree(root: NodeSpec) -> FaultTree {
    let mut nodes = IndexMap::new();
    let mut duplicates = Vec::new();
    let root_id = root.id.clone();
    insert(root, &mut nodes, &mut duplicates);
    FaultTree::from_parts(root_id, nodes, duplicates)
}

fn insert(spec: NodeSpec, nodes: &mut IndexMap<NodeId, Node>, duplicates: &mut Vec<NodeId>) {
    let (payload, children) = match spec.payload {
        SpecPayload::Children(children) => {
            let ids = children.iter().map(|c| c.id.clone()).collect();
            (Payload::Children(ids), children)
        }
        SpecPayload::Solution(text) => (Payload::Solution(text), Vec::new()),
        SpecPayload::Link(target) => (Payload::Link(target), Vec::new()),
    };
    let node = Node {
        id: spec.id.clone(),
        name: spec.name,
        kind: spec.kind,
        payload,
    };
    if nodes.contains_key(&spec.id) {
        duplicates.push(spec.id);
    } else {
        nodes.insert(spec.id, node);
    }
    for child in children {
        insert(child, nodes, duplicates);
    }
}
