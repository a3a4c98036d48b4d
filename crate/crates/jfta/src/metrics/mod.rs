//! Transcript scoring.
//!
//! Every assistant turn is judged at node level against the four-way error
//! taxonomy, with fixed precedence Graph > Plan > Solution > Path so that a
//! turn maps to at most one event:
//!
//! * **Graph**: the move misreads the tree itself: an id that does not
//!   exist, an id/name mismatch, or a query below a refuted branch or a
//!   short-circuited XOR arm.
//! * **Plan**: the move ignores feedback already given: re-querying a node
//!   answered in the current truth epoch, or re-proposing an accepted fix.
//! * **Solution**: a remedy that does not fix anything: wrong repair text,
//!   a non-leaf target, or a proposal the user rejects.
//! * **Path**: traversal discipline: leaving a confirmed subtree before
//!   finishing it, or failing to re-enter near the retracted node after a
//!   rollback.
//!
//! Rollback splits a session into two truth epochs. Plan memory resets at
//! the boundary, so re-verifying a pre-rollback answer once is legitimate;
//! asking again within the new epoch is an error.

mod node_edge;

pub use node_edge::{
    length_stats, to_node_edge, EdgeRecord, LengthStats, NodeEdgeDoc, NodeRecord,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphIndex;
use crate::harness::{SessionTranscript, Termination, TranscriptTurn};
use crate::model::{FaultTree, GateLogic, NodeId};
use crate::sample::DifficultyLevel;
use crate::scenario::ScenarioEntry;
use crate::user::{classify_action, InvalidReason, MoveClass, UserAction, Verdict};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty verdict list")]
    EmptyInput,
}

/// The four error kinds, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorKind {
    Path,
    Plan,
    Solution,
    Graph,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 4] = [
        ErrorKind::Path,
        ErrorKind::Plan,
        ErrorKind::Solution,
        ErrorKind::Graph,
    ];
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Path => "Path",
            ErrorKind::Plan => "Plan",
            ErrorKind::Solution => "Solution",
            ErrorKind::Graph => "Graph",
        };
        f.write_str(s)
    }
}

/// One erroneous assistant action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub kind: ErrorKind,
    pub turn: usize,
    pub node: Option<NodeId>,
    pub note: String,
}

/// Outcome of one scored session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionVerdict {
    pub success: bool,
    pub turns: usize,
    pub level: DifficultyLevel,
    pub events: Vec<ErrorEvent>,
}

/// Score one transcript into a verdict.
pub fn score_session(
    transcript: &SessionTranscript,
    entry: &ScenarioEntry,
    tree: &FaultTree,
    index: &GraphIndex,
) -> SessionVerdict {
    SessionVerdict {
        success: transcript.termination == Termination::Solved,
        turns: transcript.turns.len(),
        level: entry.level,
        events: classify_errors(transcript, entry, tree, index),
    }
}

struct Epoch {
    /// Definitive fault answers within the current truth epoch.
    answers: HashMap<NodeId, bool>,
    /// Gates confirmed failing, in confirmation order.
    confirmed_gates: Vec<NodeId>,
}

impl Epoch {
    fn fresh(tree: &FaultTree) -> Self {
        let mut answers = HashMap::new();
        answers.insert(tree.root_id().clone(), true);
        Epoch {
            answers,
            confirmed_gates: vec![tree.root_id().clone()],
        }
    }
}

/// Classify every assistant turn of a transcript.
pub fn classify_errors(
    transcript: &SessionTranscript,
    entry: &ScenarioEntry,
    tree: &FaultTree,
    index: &GraphIndex,
) -> Vec<ErrorEvent> {
    let _ = entry;
    let mut events = Vec::new();
    let mut epoch = Epoch::fresh(tree);
    let mut accepted: BTreeSet<NodeId> = BTreeSet::new();
    let mut pre_rollback: HashMap<NodeId, bool> = HashMap::new();
    let mut in_second_epoch = false;
    let mut reentry_judged = false;

    for turn in &transcript.turns {
        let Some(mv) = &turn.mv else { continue };

        // The displaced move on the rollback turn gets no answer; judge the
        // correction's effect on state instead of the move.
        if transcript.rollback_at == Some(turn.index) {
            pre_rollback = epoch.answers.clone();
            epoch = Epoch::fresh(tree);
            in_second_epoch = true;
            reentry_judged = false;
            if turn.reply.action == UserAction::FaultConfirmation {
                if let Some(node) = node_by_name(tree, &turn.reply.name) {
                    record_answer(tree, &mut epoch, &node, false);
                }
            }
            continue;
        }

        let class = classify_action(mv, tree);
        if let Some(event) = judge_turn(
            turn,
            mv,
            &class,
            tree,
            index,
            &epoch,
            &accepted,
            &pre_rollback,
            in_second_epoch && !reentry_judged,
        ) {
            events.push(event);
        }

        // Every first probe after the rollback settles the re-entry check.
        if in_second_epoch && !reentry_judged {
            if let MoveClass::Fault { node: Some(v), .. } = &class {
                if !pre_rollback.contains_key(v) {
                    reentry_judged = true;
                }
            }
        }

        // Fold the turn's feedback into the state.
        match &class {
            MoveClass::Fault { node: Some(v), .. } => {
                if let Some(verdict) = turn.reply.verdict.as_bool() {
                    record_answer(tree, &mut epoch, v, verdict);
                }
            }
            MoveClass::Solution { node: Some(v), .. } if turn.reply.verdict == Verdict::True => {
                accepted.insert(v.clone());
                record_answer(tree, &mut epoch, v, true);
            }
            _ => {}
        }
    }
    events
}

#[allow(clippy::too_many_arguments)]
fn judge_turn(
    turn: &TranscriptTurn,
    mv: &crate::harness::AssistantMove,
    class: &MoveClass,
    tree: &FaultTree,
    index: &GraphIndex,
    epoch: &Epoch,
    accepted: &BTreeSet<NodeId>,
    pre_rollback: &HashMap<NodeId, bool>,
    judge_reentry: bool,
) -> Option<ErrorEvent> {
    let event = |kind: ErrorKind, node: Option<NodeId>, note: &str| {
        Some(ErrorEvent {
            kind,
            turn: turn.index,
            node,
            note: note.to_string(),
        })
    };

    // Graph: the move misreads the tree itself.
    match class {
        MoveClass::Fault { node, name } | MoveClass::Solution { node, name } => {
            if !tree.contains(&mv.id) {
                return event(ErrorKind::Graph, None, "queried id does not exist");
            }
            if node.is_none() {
                return event(
                    ErrorKind::Graph,
                    Some(mv.id.clone()),
                    &format!("id does not carry the name {name:?}"),
                );
            }
        }
        MoveClass::Invalid(_) => {}
    }
    if let MoveClass::Fault { node: Some(v), .. } = class {
        if !epoch.answers.contains_key(v) && !is_live(tree, index, &epoch.answers, v) {
            return event(
                ErrorKind::Graph,
                Some(v.clone()),
                "query below a refuted branch or short-circuited XOR arm",
            );
        }
    }

    // Plan: feedback for this node was already given in this epoch.
    match class {
        MoveClass::Fault { node: Some(v), .. } => {
            if epoch.answers.contains_key(v) {
                return event(
                    ErrorKind::Plan,
                    Some(v.clone()),
                    "node re-queried after a definitive answer",
                );
            }
        }
        MoveClass::Solution { node: Some(v), .. } if accepted.contains(v) => {
            return event(
                ErrorKind::Plan,
                Some(v.clone()),
                "remedy re-proposed after acceptance",
            );
        }
        _ => {}
    }

    // Solution: a remedy that did not fix anything.
    match class {
        MoveClass::Invalid(InvalidReason::NonLeafSolutionTarget) => {
            return event(
                ErrorKind::Solution,
                Some(mv.id.clone()),
                "remedy proposed for a node that is not a bottom-level fault",
            );
        }
        MoveClass::Solution { node, .. } if turn.reply.verdict != Verdict::True => {
            return event(
                ErrorKind::Solution,
                node.clone(),
                "remedy rejected: wrong repair text or wrong target",
            );
        }
        _ => {}
    }

    // Path: traversal discipline.
    if let MoveClass::Fault { node: Some(v), .. } = class {
        if judge_reentry && !pre_rollback.contains_key(v) {
            let anchored = v == tree.root_id()
                || index.parents(v).iter().any(|p| {
                    p == tree.root_id()
                        || epoch.answers.get(p) == Some(&true)
                        || pre_rollback.get(p) == Some(&true)
                });
            if !anchored {
                return event(
                    ErrorKind::Path,
                    Some(v.clone()),
                    "first probe after rollback did not re-enter at the divergence region",
                );
            }
        }
        if !epoch.answers.contains_key(v) && !pre_rollback.contains_key(v) {
            if let Some(open) = deepest_open_gate(tree, epoch, accepted) {
                if !in_subtree(tree, &open, v) {
                    return event(
                        ErrorKind::Path,
                        Some(v.clone()),
                        &format!("left the unfinished subtree of {open}"),
                    );
                }
            }
        }
    }
    None
}

fn node_by_name(tree: &FaultTree, name: &str) -> Option<NodeId> {
    let wanted = crate::user::normalize(name);
    tree.nodes()
        .find(|n| crate::user::normalize(&n.name) == wanted)
        .map(|n| n.id.clone())
}

/// Fold one definitive answer into the epoch; links and their targets alias
/// the same state, and newly confirmed gates open an obligation.
fn record_answer(tree: &FaultTree, epoch: &mut Epoch, node: &NodeId, verdict: bool) {
    epoch.answers.insert(node.clone(), verdict);
    if let Some(target) = tree.resolve_link(node) {
        epoch.answers.insert(target.clone(), verdict);
    }
    if verdict {
        let opens = tree
            .node(node)
            .map(|n| n.kind.is_gate() || n.kind.is_link())
            .unwrap_or(false);
        if opens && !epoch.confirmed_gates.contains(node) {
            epoch.confirmed_gates.push(node.clone());
        }
    }
}

/// Is `v` still reachable from the root without passing a refuted node or a
/// short-circuited XOR sibling?
fn is_live(
    tree: &FaultTree,
    index: &GraphIndex,
    answers: &HashMap<NodeId, bool>,
    v: &NodeId,
) -> bool {
    let _ = index;
    let mut live: BTreeSet<NodeId> = BTreeSet::new();
    let mut stack = vec![tree.root_id().clone()];
    while let Some(id) = stack.pop() {
        if answers.get(&id) == Some(&false) || !live.insert(id.clone()) {
            continue;
        }
        let Some(node) = tree.node(&id) else { continue };
        let children = tree.resolved_children(&id);
        let xor_taken: Option<NodeId> =
            if node.kind.gate_logic() == Some(GateLogic::Xor) {
                children
                    .iter()
                    .find(|c| answers.get(*c) == Some(&true))
                    .cloned()
            } else {
                None
            };
        for child in children {
            if let Some(taken) = &xor_taken {
                if &child != taken {
                    continue;
                }
            }
            stack.push(child);
        }
    }
    live.contains(v)
}

/// The most recently confirmed gate whose obligation is still open.
fn deepest_open_gate(tree: &FaultTree, epoch: &Epoch, accepted: &BTreeSet<NodeId>) -> Option<NodeId> {
    epoch
        .confirmed_gates
        .iter()
        .rev()
        .find(|g| {
            let mut memo = HashMap::new();
            !is_complete(tree, epoch, accepted, g, &mut memo)
        })
        .cloned()
}

/// A node is complete when its failure has been fully diagnosed and fixed
/// within the current knowledge.
fn is_complete(
    tree: &FaultTree,
    epoch: &Epoch,
    accepted: &BTreeSet<NodeId>,
    id: &NodeId,
    memo: &mut HashMap<NodeId, bool>,
) -> bool {
    if let Some(&known) = memo.get(id) {
        return known;
    }
    memo.insert(id.clone(), true); // break diamond re-entry optimistically
    let Some(node) = tree.node(id) else { return true };

    let complete = if node.kind.is_solution() {
        accepted.contains(id) || epoch.answers.get(id) == Some(&false)
    } else if node.kind.is_link() {
        match tree.resolve_link(id) {
            Some(target) => {
                let target = target.clone();
                epoch.answers.get(id) == Some(&false)
                    || is_complete(tree, epoch, accepted, &target, memo)
            }
            None => true,
        }
    } else {
        let children = node.child_ids().to_vec();
        match node.kind.gate_logic() {
            Some(GateLogic::Xor) => children.iter().any(|c| {
                epoch.answers.get(c) == Some(&true) && is_complete(tree, epoch, accepted, c, memo)
            }),
            Some(_) => children.iter().all(|c| match epoch.answers.get(c) {
                Some(false) => true,
                Some(true) => is_complete(tree, epoch, accepted, c, memo),
                None => false,
            }),
            None => true,
        }
    };
    memo.insert(id.clone(), complete);
    complete
}

/// Is `v` inside the resolved subtree of `root` (inclusive)?
fn in_subtree(tree: &FaultTree, root: &NodeId, v: &NodeId) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![root.clone()];
    while let Some(id) = stack.pop() {
        if !seen.insert(id.clone()) {
            continue;
        }
        if &id == v {
            return true;
        }
        stack.extend(tree.resolved_children(&id));
    }
    false
}

/// Per-level slice of an aggregate report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelOutcome {
    pub level: DifficultyLevel,
    pub sessions: usize,
    pub correct: usize,
    pub correct_pct: f64,
}

/// Share of one error kind over all error events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorShare {
    pub kind: ErrorKind,
    pub events: usize,
    pub share_pct: f64,
}

/// Aggregated results over a batch of sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub per_level: Vec<LevelOutcome>,
    pub total_sessions: usize,
    pub total_correct: usize,
    pub total_pct: f64,
    pub avg_turns: f64,
    pub error_shares: Vec<ErrorShare>,
    pub total_error_events: usize,
}

/// Aggregate session verdicts into the report.
pub fn aggregate(verdicts: &[SessionVerdict]) -> Result<AggregateReport, MetricsError> {
    if verdicts.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut per_level: BTreeMap<DifficultyLevel, (usize, usize)> = BTreeMap::new();
    let mut error_counts: BTreeMap<ErrorKind, usize> = BTreeMap::new();
    let mut turns = 0usize;
    let mut correct = 0usize;
    for verdict in verdicts {
        let slot = per_level.entry(verdict.level).or_insert((0, 0));
        slot.0 += 1;
        if verdict.success {
            slot.1 += 1;
            correct += 1;
        }
        turns += verdict.turns;
        for e in &verdict.events {
            *error_counts.entry(e.kind).or_insert(0) += 1;
        }
    }
    let total_events: usize = error_counts.values().sum();
    let error_shares = ErrorKind::ALL
        .iter()
        .map(|&kind| {
            let events = error_counts.get(&kind).copied().unwrap_or(0);
            ErrorShare {
                kind,
                events,
                share_pct: if total_events == 0 {
                    0.0
                } else {
                    100.0 * events as f64 / total_events as f64
                },
            }
        })
        .collect();

    Ok(AggregateReport {
        per_level: per_level
            .into_iter()
            .map(|(level, (sessions, ok))| LevelOutcome {
                level,
                sessions,
                correct: ok,
                correct_pct: 100.0 * ok as f64 / sessions as f64,
            })
            .collect(),
        total_sessions: verdicts.len(),
        total_correct: correct,
        total_pct: 100.0 * correct as f64 / verdicts.len() as f64,
        avg_turns: turns as f64 / verdicts.len() as f64,
        error_shares,
        total_error_events: total_events,
    })
}

impl fmt::Display for AggregateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Error Action(%)")?;
        for share in &self.error_shares {
            writeln!(
                f,
                "  {:<10} {:>6.2}%  ({} events)",
                share.kind.to_string(),
                share.share_pct,
                share.events
            )?;
        }
        writeln!(f, "Correct(%)")?;
        for level in &self.per_level {
            writeln!(
                f,
                "  Level {}    {:>6.2}%  ({}/{} sessions)",
                level.level, level.correct_pct, level.correct, level.sessions
            )?;
        }
        writeln!(
            f,
            "  Total      {:>6.2}%  ({}/{} sessions)",
            self.total_pct, self.total_correct, self.total_sessions
        )?;
        write!(f, "Avg Turns    {:>6.2}", self.avg_turns)
    }
}
