//! Parent/child indexes over the resolved DAG and gate-semantics checking of
//! failure sets.
//!
//! "Resolved" means LINK edges are materialized: a LINK node is a
//! parent-position alias of its target, so the target gains the link as an
//! extra parent and the link gains the target as its only child.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FaultTree, GateLogic, NodeId, Payload};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

/// A set of node ids asserted to have failed. Serializes as a sorted id list.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FailureSet(pub BTreeSet<NodeId>);

impl FailureSet {
    pub fn contains(&self, id: &NodeId) -> bool {
        self.0.contains(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeId> {
        self.0.iter()
    }
}

impl FromIterator<NodeId> for FailureSet {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        FailureSet(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a str> for FailureSet {
    fn from_iter<T: IntoIterator<Item = &'a str>>(iter: T) -> Self {
        FailureSet(iter.into_iter().map(NodeId::new).collect())
    }
}

/// Parent and child adjacency of the resolved DAG plus a topological order.
///
/// Immutable after [`GraphIndex::build`]; shared concurrent reads are fine.
#[derive(Debug, Clone)]
pub struct GraphIndex {
    parents: HashMap<NodeId, Vec<NodeId>>,
    children: HashMap<NodeId, Vec<NodeId>>,
    depth_order: Vec<NodeId>,
}

impl GraphIndex {
    /// Index a validated tree. Parent lists keep document order: the nesting
    /// parent comes first, link aliases follow in document position.
    pub fn build(tree: &FaultTree) -> Self {
        let mut parents: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        let mut children: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for node in tree.nodes() {
            parents.entry(node.id.clone()).or_default();
            children.entry(node.id.clone()).or_default();
        }
        for node in tree.nodes() {
            for child in tree.resolved_children(&node.id) {
                children.get_mut(&node.id).expect("present").push(child.clone());
                parents.entry(child).or_default().push(node.id.clone());
            }
        }
        let depth_order = depth_order(tree);
        GraphIndex {
            parents,
            children,
            depth_order,
        }
    }

    pub fn parents(&self, id: &NodeId) -> &[NodeId] {
        self.parents.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Resolved children in document order (a link's child is its target).
    pub fn children(&self, id: &NodeId) -> &[NodeId] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// A topological order of the resolved DAG (parents before children).
    pub fn depth_order(&self) -> &[NodeId] {
        &self.depth_order
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.depth_order.iter()
    }
}

/// Post-order DFS from the root, reversed. On an acyclic resolved structure
/// this respects every edge; ties break on document child order.
fn depth_order(tree: &FaultTree) -> Vec<NodeId> {
    let mut order = Vec::with_capacity(tree.len());
    let mut done: BTreeSet<NodeId> = BTreeSet::new();
    // (node, children expanded?)
    let mut stack = vec![(tree.root_id().clone(), false)];
    let mut on_stack: BTreeSet<NodeId> = BTreeSet::new();
    while let Some((id, expanded)) = stack.pop() {
        if expanded {
            on_stack.remove(&id);
            if done.insert(id.clone()) {
                order.push(id);
            }
            continue;
        }
        if done.contains(&id) || on_stack.contains(&id) {
            continue;
        }
        on_stack.insert(id.clone());
        stack.push((id.clone(), true));
        let children = tree.resolved_children(&id);
        for child in children.into_iter().rev() {
            if !done.contains(&child) && !on_stack.contains(&child) {
                stack.push((child, false));
            }
        }
    }
    order.reverse();
    order
}

/// Kinds of gate-consistency breaches found in a failure set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateViolationKind {
    /// An AND/Fault gate in the set has a child that does not count as failed.
    AndMissingChild,
    /// An OR gate in the set has no failed child.
    OrNoFailedChild,
    /// An XOR gate in the set does not have exactly one failed child.
    XorNotExactlyOne,
    /// A LINK in the set whose target chain does not end at a failed node.
    LinkTargetNotFailed,
    /// A failed non-root node with no failed parent.
    DisconnectedFailure,
}

impl fmt::Display for GateViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateViolationKind::AndMissingChild => "and-missing-child",
            GateViolationKind::OrNoFailedChild => "or-no-failed-child",
            GateViolationKind::XorNotExactlyOne => "xor-not-exactly-one",
            GateViolationKind::LinkTargetNotFailed => "link-target-not-failed",
            GateViolationKind::DisconnectedFailure => "disconnected-failure",
        };
        f.write_str(s)
    }
}

/// One breach, anchored at the offending node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateViolation {
    pub kind: GateViolationKind,
    pub node_id: NodeId,
    pub detail: String,
}

/// Does a child count as failed for its parent gate? Links count through
/// their target chain; every other node counts by membership.
pub fn counts_failed(tree: &FaultTree, set: &FailureSet, id: &NodeId) -> bool {
    match tree.node(id).map(|n| &n.payload) {
        Some(Payload::Link(_)) => match tree.resolve_link(id) {
            Some(target) => set.contains(target),
            None => false,
        },
        _ => set.contains(id),
    }
}

/// Check a failure set against gate semantics and upward closure.
///
/// For each failed gate: AND/Fault need every child failed, OR at least one,
/// XOR exactly one. A failed LINK must alias a failed target. Every failed
/// non-root node needs at least one failed parent, so failures cannot float
/// disconnected from the root symptom.
pub fn gate_semantics_check(
    tree: &FaultTree,
    index: &GraphIndex,
    set: &FailureSet,
) -> Vec<GateViolation> {
    let mut violations = Vec::new();
    for id in set.iter() {
        let Some(node) = tree.node(id) else {
            violations.push(GateViolation {
                kind: GateViolationKind::DisconnectedFailure,
                node_id: id.clone(),
                detail: "failed id is not a tree node".into(),
            });
            continue;
        };

        if let Some(logic) = node.kind.gate_logic() {
            let children = node.child_ids();
            let failed = children
                .iter()
                .filter(|c| counts_failed(tree, set, c))
                .count();
            let breach = match logic {
                GateLogic::And if failed < children.len() => Some((
                    GateViolationKind::AndMissingChild,
                    format!("{failed} of {} children failed", children.len()),
                )),
                GateLogic::Or if failed == 0 => Some((
                    GateViolationKind::OrNoFailedChild,
                    "no failed child".to_string(),
                )),
                GateLogic::Xor if failed != 1 => Some((
                    GateViolationKind::XorNotExactlyOne,
                    format!("{failed} children failed, expected exactly 1"),
                )),
                _ => None,
            };
            if let Some((kind, detail)) = breach {
                violations.push(GateViolation {
                    kind,
                    node_id: id.clone(),
                    detail,
                });
            }
        }

        if node.kind.is_link() && !counts_failed(tree, set, id) {
            violations.push(GateViolation {
                kind: GateViolationKind::LinkTargetNotFailed,
                node_id: id.clone(),
                detail: "LINK is failed but its target is not".into(),
            });
        }

        if id != tree.root_id() {
            let has_failed_parent = index.parents(id).iter().any(|p| set.contains(p));
            if !has_failed_parent {
                violations.push(GateViolation {
                    kind: GateViolationKind::DisconnectedFailure,
                    node_id: id.clone(),
                    detail: "failed node has no failed parent".into(),
                });
            }
        }
    }
    violations
}

/// SOLUTION node ids reachable below `node` (through links), in document-order
/// depth-first position. A solution node yields itself.
pub fn solutions_under(
    tree: &FaultTree,
    node: &NodeId,
) -> Result<Vec<NodeId>, GraphError> {
    if !tree.contains(node) {
        return Err(GraphError::UnknownNode(node.clone()));
    }
    let mut out = Vec::new();
    let mut visited = BTreeSet::new();
    let mut stack = vec![node.clone()];
    while let Some(id) = stack.pop() {
        if !visited.insert(id.clone()) {
            continue;
        }
        let Some(n) = tree.node(&id) else { continue };
        if n.kind.is_solution() {
            out.push(id);
            continue;
        }
        for child in tree.resolved_children(&id).into_iter().rev() {
            if !visited.contains(&child) {
                stack.push(child);
            }
        }
    }
    Ok(out)
}
