//! The deterministic rule-based user.
//!
//! The user holds the ground truth of a session (the active fault path and
//! the repair text of each root cause) and answers assistant moves by rule:
//!
//! * a move that queries the status of exactly one tree node is a fault
//!   confirmation, answered `True` exactly when the queried id/name pair
//!   matches a node of the active path (a LINK counts through its target);
//! * a move that proposes a remedy for exactly one bottom-level fault is a
//!   solution confirmation, accepted when it targets an unresolved root
//!   cause with the matching repair text;
//! * everything else is invalid input, answered with an empty-field reply:
//!   no recognizable target, several targets at once, remedies aimed at
//!   gates, requests for the full fault list.
//!
//! Classification is structural: it is driven by the move's id field and by
//! matching node names and repair texts inside the response text, after
//! whitespace/case normalization.

mod prompt;
mod vague;

pub use prompt::{user_prompt, USER_PROMPT_TEMPLATE};
pub use vague::{
    is_correction_text, render_vague, VagueRenderer, CONCLUSIVE_TERMS, CORRECTION_MARKERS,
    HEDGE_MARKERS,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::AssistantMove;
use crate::model::{FaultTree, NodeId};
use crate::sample::FaultPath;

#[derive(Debug, Error)]
pub enum UserError {
    #[error("rollback has already fired for this session")]
    RollbackAlreadyFired,
    #[error("paths do not diverge; no node to retract")]
    NoDivergence,
}

/// Remedy phrases that mark a move as a solution proposal even when the
/// response does not quote a known repair text verbatim.
pub const REMEDY_CUES: &[&str] = &[
    "resolved by",
    "can be fixed",
    "solution",
    "recommend",
    "repair",
    "replace",
    "install",
    "apply",
];

/// The `action` field of a user reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserAction {
    #[serde(rename = "Fault Confirmation")]
    FaultConfirmation,
    #[serde(rename = "Solution Confirmation")]
    SolutionConfirmation,
    #[serde(rename = "Invalid Input")]
    InvalidInput,
}

/// The `return` field of a user reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "True")]
    True,
    #[serde(rename = "False")]
    False,
    #[serde(rename = "")]
    Empty,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::True => Some(true),
            Verdict::False => Some(false),
            Verdict::Empty => None,
        }
    }
}

/// The four-field reply object sent back to the assistant each turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserReply {
    pub action: UserAction,
    pub name: String,
    #[serde(rename = "return")]
    pub verdict: Verdict,
    pub response: String,
}

impl UserReply {
    pub fn invalid() -> Self {
        UserReply {
            action: UserAction::InvalidInput,
            name: String::new(),
            verdict: Verdict::Empty,
            response: String::new(),
        }
    }
}

/// Why a move was classified as invalid input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidReason {
    /// The response names no tree node.
    NoTarget,
    /// The response names two or more distinct tree nodes.
    MultipleTargets,
    /// A remedy was proposed for something that is not a bottom-level fault.
    NonLeafSolutionTarget,
}

/// Structural classification of an assistant move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoveClass {
    /// A status query for one node. `node` is set when the id field agrees
    /// with the node named in the response.
    Fault { node: Option<NodeId>, name: String },
    /// A remedy proposal for one solution leaf. `node` is set when the id
    /// field agrees with the named leaf.
    Solution { node: Option<NodeId>, name: String },
    Invalid(InvalidReason),
}

impl MoveClass {
    pub fn action(&self) -> UserAction {
        match self {
            MoveClass::Fault { .. } => UserAction::FaultConfirmation,
            MoveClass::Solution { .. } => UserAction::SolutionConfirmation,
            MoveClass::Invalid(_) => UserAction::InvalidInput,
        }
    }
}

/// Case- and whitespace-insensitive canonical form used by every match.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn contains_normalized(haystack: &str, needle: &str) -> bool {
    !needle.is_empty() && haystack.contains(needle)
}

/// Classify one assistant move against the tree.
pub fn classify_action(mv: &AssistantMove, tree: &FaultTree) -> MoveClass {
    let response = normalize(&mv.response);

    // Distinct node names mentioned in the response. A matched name that is
    // a substring of another matched name only rode along and is dropped.
    let mut names: Vec<String> = Vec::new();
    for node in tree.nodes() {
        let name = normalize(&node.name);
        if contains_normalized(&response, &name) && !names.contains(&name) {
            names.push(name);
        }
    }
    let mentioned: Vec<&String> = names
        .iter()
        .filter(|name| {
            !names
                .iter()
                .any(|other| *other != **name && other.contains(*name))
        })
        .collect();

    match mentioned.len() {
        0 => return MoveClass::Invalid(InvalidReason::NoTarget),
        1 => {}
        _ => return MoveClass::Invalid(InvalidReason::MultipleTargets),
    }
    let target_name = mentioned[0].clone();

    // The id field agrees when it resolves to a node carrying the named text.
    let by_id = tree.node(&mv.id).filter(|n| normalize(&n.name) == target_name);
    let named_nodes: Vec<_> = tree
        .nodes()
        .filter(|n| normalize(&n.name) == target_name)
        .collect();
    let display_name = by_id
        .or(named_nodes.first().copied())
        .map(|n| n.name.clone())
        .unwrap_or(target_name.clone());

    let proposes_remedy = tree
        .nodes()
        .filter_map(|n| n.solution_text())
        .any(|text| contains_normalized(&response, &normalize(text)))
        || REMEDY_CUES.iter().any(|cue| response.contains(cue));

    if proposes_remedy {
        let named_is_leaf = named_nodes.iter().any(|n| n.kind.is_solution());
        if !named_is_leaf {
            return MoveClass::Invalid(InvalidReason::NonLeafSolutionTarget);
        }
        return MoveClass::Solution {
            node: by_id.map(|n| n.id.clone()),
            name: display_name,
        };
    }

    MoveClass::Fault {
        node: by_id.map(|n| n.id.clone()),
        name: display_name,
    }
}

/// Session ground truth: the active path, the repair text per root cause,
/// and which causes have already been fixed.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub active: FaultPath,
    pub solution_map: BTreeMap<NodeId, String>,
    pub resolved: BTreeSet<NodeId>,
    pub rollback_fired: bool,
}

impl GroundTruth {
    pub fn for_path(path: FaultPath) -> Self {
        let solution_map = path
            .root_causes
            .iter()
            .map(|c| (c.id.clone(), c.solution_text.clone()))
            .collect();
        GroundTruth {
            active: path,
            solution_map,
            resolved: BTreeSet::new(),
            rollback_fired: false,
        }
    }

    /// All root causes of the active path are fixed.
    pub fn solved(&self) -> bool {
        self.active
            .root_causes
            .iter()
            .all(|c| self.resolved.contains(&c.id))
    }

    /// Is `id` failing on the active path? LINK nodes count through their
    /// target chain.
    pub fn on_active_path(&self, tree: &FaultTree, id: &NodeId) -> bool {
        if self.active.selected.contains(id) {
            return true;
        }
        match tree.node(id) {
            Some(n) if n.kind.is_link() => tree
                .resolve_link(id)
                .map(|t| self.active.selected.contains(t))
                .unwrap_or(false),
            _ => false,
        }
    }
}

/// What one user step produced, with the bookkeeping the harness needs.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub reply: UserReply,
    /// The node the move was resolved to, when id and name agreed.
    pub queried: Option<NodeId>,
    /// A root cause that was fixed by this step.
    pub accepted: Option<NodeId>,
}

/// Answer one classified move and update the ground truth.
pub fn step_user(
    mv: &AssistantMove,
    truth: &mut GroundTruth,
    tree: &FaultTree,
    renderer: &mut VagueRenderer,
) -> StepOutcome {
    match classify_action(mv, tree) {
        MoveClass::Invalid(_) => StepOutcome {
            reply: UserReply::invalid(),
            queried: None,
            accepted: None,
        },
        MoveClass::Fault { node, name } => {
            let on_path = node
                .as_ref()
                .map(|n| truth.on_active_path(tree, n))
                .unwrap_or(false);
            let reply = UserReply {
                action: UserAction::FaultConfirmation,
                name: name.clone(),
                verdict: Verdict::from_bool(on_path),
                response: renderer.render(&name, on_path, UserAction::FaultConfirmation),
            };
            StepOutcome {
                reply,
                queried: node,
                accepted: None,
            }
        }
        MoveClass::Solution { node, name } => {
            let response = normalize(&mv.response);
            let accepted_cause = node.as_ref().filter(|n| {
                !truth.resolved.contains(*n)
                    && truth
                        .solution_map
                        .get(*n)
                        .map(|text| contains_normalized(&response, &normalize(text)))
                        .unwrap_or(false)
            });
            let verdict = accepted_cause.is_some();
            if let Some(cause) = accepted_cause {
                truth.resolved.insert(cause.clone());
            }
            let reply = UserReply {
                action: UserAction::SolutionConfirmation,
                name: name.clone(),
                verdict: Verdict::from_bool(verdict),
                response: renderer.render(&name, verdict, UserAction::SolutionConfirmation),
            };
            StepOutcome {
                reply,
                queried: node.clone(),
                accepted: if verdict { node } else { None },
            }
        }
    }
}

/// Fire the rollback: retract the first path-a node beyond the common
/// prefix whose failure state actually flips on path b (a LINK whose target
/// keeps failing flips nothing), and switch the ground truth to path b.
/// Root causes fixed so far stay resolved when they are also causes of
/// path b.
pub fn emit_rollback(
    truth: &mut GroundTruth,
    path_b: &FaultPath,
    tree: &FaultTree,
    renderer: &mut VagueRenderer,
) -> Result<(UserReply, NodeId), UserError> {
    if truth.rollback_fired {
        return Err(UserError::RollbackAlreadyFired);
    }
    let prefix = common_prefix_len(&truth.active.order, &path_b.order);
    let b_set = path_b.failure_set();
    let divergence = truth.active.order[prefix..]
        .iter()
        .find(|id| !crate::graph::counts_failed(tree, &b_set, id))
        .cloned()
        .ok_or(UserError::NoDivergence)?;

    let name = tree
        .node(&divergence)
        .map(|n| n.name.clone())
        .unwrap_or_else(|| divergence.to_string());
    let reply = UserReply {
        action: UserAction::FaultConfirmation,
        name: name.clone(),
        verdict: Verdict::False,
        response: renderer.render_correction(&name),
    };

    let carryover: BTreeSet<NodeId> = path_b
        .root_causes
        .iter()
        .map(|c| c.id.clone())
        .filter(|id| truth.resolved.contains(id))
        .collect();
    truth.active = path_b.clone();
    truth.solution_map = truth
        .active
        .root_causes
        .iter()
        .map(|c| (c.id.clone(), c.solution_text.clone()))
        .collect();
    truth.resolved = carryover;
    truth.rollback_fired = true;
    Ok((reply, divergence))
}

/// Shared leading length of two DFS orders.
pub fn common_prefix_len(a: &[NodeId], b: &[NodeId]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}
