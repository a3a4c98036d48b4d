//! The reference diagnosis policy.
//!
//! A deterministic depth-first walk over the fault tree, driven entirely by
//! the dialogue so far: query the children of confirmed gates in document
//! order, skip refuted branches, stop probing an XOR's siblings once one arm
//! is confirmed, propose the mapped repair as soon as a bottom-level fault
//! is confirmed, and on a rollback correction drop the now-stale answers and
//! re-enter from the root, re-verifying as needed.
//!
//! The policy recomputes its state from the visible transcript every turn,
//! exactly like an external assistant would have to.

use std::collections::{BTreeSet, HashMap};

use crate::model::{FaultTree, GateLogic, NodeId};
use crate::user::{classify_action, normalize, MoveClass, UserAction, UserReply};

use super::{AssistantMove, ChatMessage};

const QUERY_FRAMES: &[(&str, &str)] = &[
    ("Could you take a look at the {name}?", "Working down the branch the user confirmed, in document order."),
    ("Next, let's examine the {name}.", "The previous answer narrows the search; this child is the next unchecked one."),
    ("How do things seem around the {name} right now?", "Still inside the confirmed subtree; checking its next child."),
    ("I'd like to verify the {name} before moving on.", "Confirming this node decides which branch to enter."),
];

const PROPOSE_FRAMES: &[(&str, &str)] = &[
    ("The {name} can be resolved by: {text}.", "A bottom-level fault is confirmed; giving its remedy."),
    ("For the {name}, please carry out: {text}.", "This root cause is verified, so it is time to fix it."),
    ("To deal with the {name}, apply the following: {text}.", "The user confirmed this leaf; providing the repair action."),
];

#[derive(Debug)]
enum Intent {
    Query(NodeId),
    Propose(NodeId, String),
}

#[derive(Debug, Default)]
struct OracleState {
    /// Definitive fault answers in the current truth epoch.
    answers: HashMap<NodeId, bool>,
    /// Accepted repairs, kept across epochs: a completed physical fix stays
    /// done even when the dialogue rolls back.
    accepted: BTreeSet<NodeId>,
    /// Causes whose proposal the user rejected; never re-proposed.
    abandoned: BTreeSet<NodeId>,
}

/// Compute the next assistant move from the dialogue so far.
pub fn oracle_assistant_step(
    tree: &FaultTree,
    turns: &[(AssistantMove, UserReply)],
) -> AssistantMove {
    let state = rebuild_state(tree, turns);
    let mut visited = BTreeSet::new();
    let intent = visit(tree, &state, tree.root_id(), &mut visited)
        // Fully explored but not solved; re-anchor at the root symptom.
        .unwrap_or_else(|| Intent::Query(tree.root_id().clone()));
    render(tree, intent, turns.len())
}

fn rebuild_state(tree: &FaultTree, turns: &[(AssistantMove, UserReply)]) -> OracleState {
    let mut state = OracleState::default();
    state.answers.insert(tree.root_id().clone(), true);

    for (mv, reply) in turns {
        match reply.action {
            UserAction::FaultConfirmation => {
                let Some(verdict) = reply.verdict.as_bool() else {
                    continue;
                };
                let reply_node = node_by_name(tree, &reply.name);
                if is_correction(tree, mv, reply) {
                    // Answers gathered before the rollback may describe the
                    // retracted branch; start the epoch from scratch.
                    state.answers.clear();
                    state.answers.insert(tree.root_id().clone(), true);
                    if let Some(node) = reply_node {
                        state.answers.insert(node, verdict);
                    }
                } else if let Some(node) = reply_node {
                    state.answers.insert(node, verdict);
                }
            }
            UserAction::SolutionConfirmation => {
                let Some(node) = node_by_name(tree, &reply.name) else {
                    continue;
                };
                match reply.verdict.as_bool() {
                    Some(true) => {
                        state.answers.insert(node.clone(), true);
                        state.accepted.insert(node);
                    }
                    Some(false) => {
                        state.abandoned.insert(node);
                    }
                    None => {}
                }
            }
            UserAction::InvalidInput => {}
        }
    }

    // A link and its (final) target describe the same failure state.
    for node in tree.nodes().filter(|n| n.kind.is_link()) {
        if let Some(target) = tree.resolve_link(&node.id).cloned() {
            match (
                state.answers.get(&node.id).copied(),
                state.answers.get(&target).copied(),
            ) {
                (Some(v), None) => {
                    state.answers.insert(target, v);
                }
                (None, Some(v)) => {
                    state.answers.insert(node.id.clone(), v);
                }
                _ => {}
            }
        }
    }
    state
}

/// A fault-shaped reply that retracts an earlier statement rather than
/// answering the move in front of it: its text reads as a retraction, it
/// names a different node, or it answers a move that was not a fault query
/// at all.
fn is_correction(tree: &FaultTree, mv: &AssistantMove, reply: &UserReply) -> bool {
    if reply.action != UserAction::FaultConfirmation {
        return false;
    }
    if crate::user::is_correction_text(&reply.response) {
        return true;
    }
    match classify_action(mv, tree) {
        MoveClass::Fault { name, .. } => normalize(&name) != normalize(&reply.name),
        MoveClass::Solution { .. } | MoveClass::Invalid(_) => true,
    }
}

fn node_by_name(tree: &FaultTree, name: &str) -> Option<NodeId> {
    let wanted = normalize(name);
    tree.nodes()
        .find(|n| normalize(&n.name) == wanted)
        .map(|n| n.id.clone())
}

/// Depth-first search over confirmed territory. Returns the next action
/// pending inside the subtree of `id`, or `None` when it is fully handled.
fn visit(
    tree: &FaultTree,
    state: &OracleState,
    id: &NodeId,
    visited: &mut BTreeSet<NodeId>,
) -> Option<Intent> {
    if !visited.insert(id.clone()) {
        return None;
    }
    let node = tree.node(id)?;

    if node.kind.is_solution() {
        if !state.accepted.contains(id) && !state.abandoned.contains(id) {
            let text = node.solution_text().unwrap_or_default().to_string();
            return Some(Intent::Propose(id.clone(), text));
        }
        return None;
    }

    if node.kind.is_link() {
        let target = tree.resolve_link(id)?.clone();
        return visit(tree, state, &target, visited);
    }

    let children = node.child_ids();
    match node.kind.gate_logic() {
        Some(GateLogic::Xor) => {
            if let Some(confirmed) = children
                .iter()
                .find(|c| state.answers.get(*c) == Some(&true))
            {
                return visit(tree, state, confirmed, visited);
            }
            children
                .iter()
                .find(|c| !state.answers.contains_key(*c))
                .map(|c| Intent::Query(c.clone()))
        }
        Some(_) => {
            for child in children {
                match state.answers.get(child) {
                    None => return Some(Intent::Query(child.clone())),
                    Some(true) => {
                        if let Some(intent) = visit(tree, state, child, visited) {
                            return Some(intent);
                        }
                    }
                    Some(false) => {}
                }
            }
            None
        }
        None => None,
    }
}

fn render(tree: &FaultTree, intent: Intent, turn: usize) -> AssistantMove {
    match intent {
        Intent::Query(id) => {
            let name = tree.node(&id).map(|n| n.name.clone()).unwrap_or_default();
            let (frame, think) = QUERY_FRAMES[turn % QUERY_FRAMES.len()];
            AssistantMove {
                think: think.to_string(),
                id,
                response: frame.replace("{name}", &name),
            }
        }
        Intent::Propose(id, text) => {
            let name = tree.node(&id).map(|n| n.name.clone()).unwrap_or_default();
            let (frame, think) = PROPOSE_FRAMES[turn % PROPOSE_FRAMES.len()];
            AssistantMove {
                think: think.to_string(),
                id,
                response: frame.replace("{name}", &name).replace("{text}", &text),
            }
        }
    }
}

/// Rebuild (move, reply) pairs from the visible chat history: assistant
/// messages carry the raw move, later user messages the reply object. The
/// opening symptom statement is not an object and is skipped.
pub fn pairs_from_history(history: &[ChatMessage]) -> Vec<(AssistantMove, UserReply)> {
    let mut pairs = Vec::new();
    let mut pending: Option<AssistantMove> = None;
    for message in history {
        match message.role.as_str() {
            "assistant" => {
                pending = super::parse_assistant_move(&message.content).ok();
            }
            "user" => {
                if let (Some(mv), Ok(reply)) = (
                    pending.take(),
                    serde_json::from_str::<UserReply>(&message.content),
                ) {
                    pairs.push((mv, reply));
                }
            }
            _ => {}
        }
    }
    pairs
}
