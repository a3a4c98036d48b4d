//! Structural validation.
//!
//! Violations are data, not failures: the report lists every breach of the
//! tree constraints so that authoring tools can show them all at once.
//! A tree with an empty report is safe for indexing, sampling and diagnosis.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FaultTree, NodeId, Payload};

/// Constraint classes checked by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    /// Two nodes share one id.
    DuplicateId,
    /// A LINK references an id that is not defined anywhere in the tree.
    DanglingLink,
    /// A LINK references itself.
    SelfLink,
    /// The resolved structure (LINK edges materialized) contains a cycle.
    Cycle,
    /// A SOLUTION node is not a leaf of the resolved structure.
    SolutionNotLeaf,
    /// A gate node has no children.
    EmptyGate,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationCode::DuplicateId => "duplicate-id",
            ViolationCode::DanglingLink => "dangling-link",
            ViolationCode::SelfLink => "self-link",
            ViolationCode::Cycle => "cycle",
            ViolationCode::SolutionNotLeaf => "solution-not-leaf",
            ViolationCode::EmptyGate => "empty-gate",
        };
        f.write_str(s)
    }
}

/// One constraint breach, anchored at a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub node_id: NodeId,
    pub message: String,
}

/// All violations found in one tree; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "valid: no violations");
        }
        for v in &self.violations {
            writeln!(f, "[{}] node {}: {}", v.code, v.node_id, v.message)?;
        }
        Ok(())
    }
}

/// Check every structural constraint and report all breaches.
pub fn validate(tree: &FaultTree) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen_duplicates: Vec<&NodeId> = Vec::new();
    for id in tree.duplicate_ids() {
        if !seen_duplicates.contains(&id) {
            seen_duplicates.push(id);
            violations.push(Violation {
                code: ViolationCode::DuplicateId,
                node_id: id.clone(),
                message: format!("id {id} is defined more than once"),
            });
        }
    }

    for node in tree.nodes() {
        match &node.payload {
            Payload::Link(target) => {
                if target == &node.id {
                    violations.push(Violation {
                        code: ViolationCode::SelfLink,
                        node_id: node.id.clone(),
                        message: "LINK references itself".into(),
                    });
                } else if !tree.contains(target) {
                    violations.push(Violation {
                        code: ViolationCode::DanglingLink,
                        node_id: node.id.clone(),
                        message: format!("LINK target {target} is not defined"),
                    });
                }
            }
            Payload::Children(ids) => {
                if node.kind.is_solution() {
                    violations.push(Violation {
                        code: ViolationCode::SolutionNotLeaf,
                        node_id: node.id.clone(),
                        message: "SOLUTION node has children in the resolved structure".into(),
                    });
                } else if ids.is_empty() {
                    violations.push(Violation {
                        code: ViolationCode::EmptyGate,
                        node_id: node.id.clone(),
                        message: format!("{} gate has no children", node.kind.token()),
                    });
                }
            }
            Payload::Solution(_) => {}
        }
        // A gate kind whose payload is not a child object cannot drive
        // diagnosis below it; report it as an empty gate.
        if node.kind.is_gate() && !matches!(node.payload, Payload::Children(_)) {
            violations.push(Violation {
                code: ViolationCode::EmptyGate,
                node_id: node.id.clone(),
                message: format!("{} gate carries no child object", node.kind.token()),
            });
        }
    }

    find_cycles(tree, &mut violations);
    ValidationReport { violations }
}

/// Depth-first search with an ancestor stack over the resolved structure.
/// Each back edge is reported once, anchored at the edge source.
fn find_cycles(tree: &FaultTree, violations: &mut Vec<Violation>) {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }

    let mut color: HashMap<NodeId, Color> = tree
        .nodes()
        .map(|n| (n.id.clone(), Color::White))
        .collect();

    // Iterative DFS from the root; (node, next child index).
    let root = tree.root_id().clone();
    let mut stack: Vec<(NodeId, usize)> = vec![(root.clone(), 0)];
    color.insert(root, Color::Grey);

    while let Some((node_id, child_idx)) = stack.last_mut() {
        let children = tree.resolved_children(node_id);
        if *child_idx < children.len() {
            let child = children[*child_idx].clone();
            *child_idx += 1;
            if child == *node_id {
                // Self-links are reported separately.
                continue;
            }
            let source = node_id.clone();
            match color.get(&child).copied().unwrap_or(Color::White) {
                Color::Grey => {
                    // Walk up the stack to the grey node and lay the loop out
                    // as child -> ... -> source -> child.
                    let mut chain: Vec<String> = vec![source.to_string()];
                    for (ancestor, _) in stack.iter().rev().skip(1) {
                        chain.push(ancestor.to_string());
                        if *ancestor == child {
                            break;
                        }
                    }
                    chain.reverse();
                    chain.push(child.to_string());
                    violations.push(Violation {
                        code: ViolationCode::Cycle,
                        node_id: source,
                        message: format!("edge to {child} closes a cycle: {}", chain.join(" -> ")),
                    });
                }
                Color::White => {
                    color.insert(child.clone(), Color::Grey);
                    stack.push((child, 0));
                }
                Color::Black => {}
            }
        } else {
            let finished = node_id.clone();
            color.insert(finished, Color::Black);
            stack.pop();
        }
    }
}
