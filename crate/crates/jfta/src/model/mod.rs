//! The JFTA document model: node kinds, the fault tree itself, and the
//! parse / validate / serialize entry points.
//!
//! A fault tree is a rooted structure whose nested gates may additionally
//! reference earlier nodes through `LINK` nodes, turning the tree into a DAG.
//! Trees are immutable once built; every operation in the rest of the crate
//! takes `&FaultTree`.

mod builder;
mod parse;
mod serialize;
mod validate;

pub use builder::{gate, link, raw, solution, NodeSpec, SpecPayload};
pub use parse::{parse_fault_tree, parse_with_registry, ParseError};
pub use validate::{validate, ValidationReport, Violation, ViolationCode};

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Identifier of a node, unique within one tree. Ids are opaque text;
/// numeric-looking ids like `"14"` carry no ordering semantics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
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

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// Boolean behavior of a gate over the failure states of its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateLogic {
    /// All children must fail.
    And,
    /// At least one child must fail.
    Or,
    /// Exactly one child must fail.
    Xor,
}

/// The kind of a node. The six standard kinds match the `NextType` tokens of
/// the document format; additional gate tokens can be whitelisted through a
/// [`KindRegistry`], each mapped onto one of the standard gate logics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Xor,
    Or,
    And,
    /// An intermediate fault wrapper. Behaves like a single-child AND gate.
    Fault,
    /// A leaf carrying the repair action for a bottom-level fault.
    Solution,
    /// An alias referencing another node by id.
    Link,
    /// A registered custom gate token with declared logic.
    Custom { token: String, logic: GateLogic },
}

impl NodeKind {
    /// The `NextType` token for this kind.
    pub fn token(&self) -> &str {
        match self {
            NodeKind::Xor => "XOR",
            NodeKind::Or => "OR",
            NodeKind::And => "AND",
            NodeKind::Fault => "Fault",
            NodeKind::Solution => "Solution",
            NodeKind::Link => "LINK",
            NodeKind::Custom { token, .. } => token,
        }
    }

    /// True for kinds whose `NextTree` is an object of child nodes.
    pub fn is_gate(&self) -> bool {
        self.gate_logic().is_some()
    }

    /// Gate behavior, if any. `Fault` wrappers check like AND gates: their
    /// single child must fail when the wrapper does.
    pub fn gate_logic(&self) -> Option<GateLogic> {
        match self {
            NodeKind::Xor => Some(GateLogic::Xor),
            NodeKind::Or => Some(GateLogic::Or),
            NodeKind::And | NodeKind::Fault => Some(GateLogic::And),
            NodeKind::Solution | NodeKind::Link => None,
            NodeKind::Custom { logic, .. } => Some(*logic),
        }
    }

    pub fn is_solution(&self) -> bool {
        matches!(self, NodeKind::Solution)
    }

    pub fn is_link(&self) -> bool {
        matches!(self, NodeKind::Link)
    }
}

/// Whitelist of accepted `NextType` tokens. The six standard kinds are always
/// accepted; custom gate tokens must be registered together with the gate
/// logic they check as.
#[derive(Debug, Clone, Default)]
pub struct KindRegistry {
    custom: IndexMap<String, GateLogic>,
}

impl KindRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register an additional gate token. Returns `self` for chaining.
    pub fn register_gate(mut self, token: impl Into<String>, logic: GateLogic) -> Self {
        self.custom.insert(token.into(), logic);
        self
    }

    /// Resolve a `NextType` token to a kind, if accepted.
    pub fn resolve(&self, token: &str) -> Option<NodeKind> {
        match token {
            "XOR" => Some(NodeKind::Xor),
            "OR" => Some(NodeKind::Or),
            "AND" => Some(NodeKind::And),
            "Fault" => Some(NodeKind::Fault),
            "Solution" => Some(NodeKind::Solution),
            "LINK" => Some(NodeKind::Link),
            other => self.custom.get(other).map(|logic| NodeKind::Custom {
                token: other.to_string(),
                logic: *logic,
            }),
        }
    }
}

/// Content of a node: child list for gates, repair text for solutions,
/// target id for links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payload {
    /// Ordered child ids, in document order.
    Children(Vec<NodeId>),
    /// Natural-language repair action.
    Solution(String),
    /// Referenced node id.
    Link(NodeId),
}

/// One node of a fault tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub payload: Payload,
}

impl Node {
    /// Child ids in document order; empty for non-gate payloads.
    pub fn child_ids(&self) -> &[NodeId] {
        match &self.payload {
            Payload::Children(ids) => ids,
            _ => &[],
        }
    }

    pub fn solution_text(&self) -> Option<&str> {
        match &self.payload {
            Payload::Solution(text) => Some(text),
            _ => None,
        }
    }

    pub fn link_target(&self) -> Option<&NodeId> {
        match &self.payload {
            Payload::Link(target) => Some(target),
            _ => None,
        }
    }
}

/// An immutable fault tree: one root plus an id-keyed node table in document
/// (pre-order) position. Construction never validates; run [`validate`] to
/// obtain a violation report before using a tree for sampling or diagnosis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultTree {
    root_id: NodeId,
    nodes: IndexMap<NodeId, Node>,
    /// Ids that occurred more than once in the source document, in order of
    /// the extra occurrences. The first definition wins the table slot.
    duplicate_ids: Vec<NodeId>,
}

impl FaultTree {
    pub(crate) fn from_parts(
        root_id: NodeId,
        nodes: IndexMap<NodeId, Node>,
        duplicate_ids: Vec<NodeId>,
    ) -> Self {
        FaultTree {
            root_id,
            nodes,
            duplicate_ids,
        }
    }

    /// Build a tree from a programmatic [`NodeSpec`]. No validation happens
    /// here either, which is deliberate: the validator test suite constructs
    /// defective trees this way.
    pub fn build(root: NodeSpec) -> Self {
        builder::build_tree(root)
    }

    pub fn root_id(&self) -> &NodeId {
        &self.root_id
    }

    pub fn root(&self) -> &Node {
        &self.nodes[&self.root_id]
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    /// Convenience lookup by raw id text.
    pub fn get(&self, id: &str) -> Option<&Node> {
        self.nodes.get(&NodeId::new(id))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    /// All nodes in document (pre-order) position.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn duplicate_ids(&self) -> &[NodeId] {
        &self.duplicate_ids
    }

    /// Ids of SOLUTION nodes in document order.
    pub fn solution_ids(&self) -> Vec<NodeId> {
        self.nodes
            .values()
            .filter(|n| n.kind.is_solution())
            .map(|n| n.id.clone())
            .collect()
    }

    /// Number of nodes per kind token, useful for corpus summaries.
    pub fn kind_counts(&self) -> IndexMap<String, usize> {
        let mut counts = IndexMap::new();
        for node in self.nodes.values() {
            *counts.entry(node.kind.token().to_string()).or_insert(0) += 1;
        }
        counts
    }

    /// Follow a chain of LINK nodes to the first non-link node id. Returns
    /// `None` on a dangling target or a link cycle.
    pub fn resolve_link(&self, id: &NodeId) -> Option<&NodeId> {
        let mut current = id;
        let mut seen = HashSet::new();
        loop {
            let node = self.nodes.get(current)?;
            match &node.payload {
                Payload::Link(target) => {
                    if !seen.insert(current.clone()) {
                        return None;
                    }
                    current = target;
                }
                _ => return Some(&node.id),
            }
        }
    }

    /// Edges of the resolved structure leaving `id`: child edges for gates,
    /// the target edge for links. Unresolvable ids are skipped.
    pub fn resolved_children(&self, id: &NodeId) -> Vec<NodeId> {
        let Some(node) = self.nodes.get(id) else {
            return Vec::new();
        };
        match &node.payload {
            Payload::Children(ids) => ids.iter().filter(|c| self.contains(c)).cloned().collect(),
            Payload::Link(target) if self.contains(target) => vec![target.clone()],
            _ => Vec::new(),
        }
    }
}
