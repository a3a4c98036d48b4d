//! The dialogue loop between an assistant and the simulated user.
//!
//! A session walks the ReAct protocol: the user opens with the top-level
//! symptom, the assistant answers one JSON move per turn, the user replies
//! with the four-field object, and the loop ends when every root cause of
//! the active path is fixed (solved), the turn budget runs out, or the
//! assistant breaks protocol three turns in a row. Rollback entries switch
//! the ground truth mid-session through an ordinary-looking user turn.

mod adapter;
mod io;
mod move_parse;
mod oracle;
mod prompt;

pub use adapter::{
    api_key_from_env, AdapterError, AssistantAdapter, EndpointAdapter, EndpointConfig,
    OracleAdapter,
};
pub use io::{read_transcript, write_transcript, LoadedSession, TranscriptError};
pub use move_parse::{parse_assistant_move, AssistantMove, MoveParseError};
pub use oracle::{oracle_assistant_step, pairs_from_history};
pub use prompt::{assistant_prompt, ASSISTANT_PROMPT_TEMPLATE};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{FaultTree, NodeId};
use crate::sample::FaultPath;
use crate::scenario::ScenarioEntry;
use crate::user::{
    emit_rollback, step_user, GroundTruth, StepOutcome, UserReply, VagueRenderer,
};

/// Consecutive unparseable assistant turns before the session is aborted.
pub const PROTOCOL_STRIKE_LIMIT: u32 = 3;

/// One chat message on the adapter wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

/// How a session ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Solved,
    TurnLimit,
    ProtocolFailure,
}

/// One dialogue turn as recorded: the raw assistant output, its parsed move
/// when the protocol was followed, and the user's reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub index: usize,
    pub raw_assistant: String,
    #[serde(rename = "move")]
    pub mv: Option<AssistantMove>,
    pub reply: UserReply,
}

/// Full record of one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub tree_id: String,
    pub seed: u64,
    pub system_prompt: String,
    pub opening: String,
    pub turns: Vec<TranscriptTurn>,
    pub rollback_at: Option<usize>,
    pub termination: Termination,
}

/// The user side of a session. The rule-based implementation is
/// [`RuleUser`]; a generative user can be plugged in through this seam.
pub trait DialogueUser {
    /// The opening message stating the top-level symptom.
    fn opening(&mut self) -> String;
    /// Answer one parsed assistant move.
    fn step(&mut self, mv: &AssistantMove) -> StepOutcome;
    /// Fire the rollback correction, if one is pending.
    fn fire_rollback(&mut self) -> Option<(UserReply, NodeId)>;
    /// All root causes of the active path are fixed.
    fn solved(&self) -> bool;
}

/// The deterministic rule-based user over one entry's ground truth.
pub struct RuleUser<'t> {
    tree: &'t FaultTree,
    truth: GroundTruth,
    pending_b: Option<FaultPath>,
    renderer: VagueRenderer,
}

impl<'t> RuleUser<'t> {
    pub fn for_entry(tree: &'t FaultTree, entry: &ScenarioEntry, style_seed: u64) -> Self {
        RuleUser {
            tree,
            truth: GroundTruth::for_path(entry.path_a.clone()),
            pending_b: Some(entry.path_b.clone()),
            renderer: VagueRenderer::new(style_seed),
        }
    }

    /// A user over a single path, with no rollback pending.
    pub fn for_path(tree: &'t FaultTree, path: FaultPath, style_seed: u64) -> Self {
        RuleUser {
            tree,
            truth: GroundTruth::for_path(path),
            pending_b: None,
            renderer: VagueRenderer::new(style_seed),
        }
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }
}

impl DialogueUser for RuleUser<'_> {
    fn opening(&mut self) -> String {
        let symptom = &self.tree.root().name;
        format!(
            "We have a problem on our side: {symptom}. Could you walk me through finding what is behind it?"
        )
    }

    fn step(&mut self, mv: &AssistantMove) -> StepOutcome {
        step_user(mv, &mut self.truth, self.tree, &mut self.renderer)
    }

    fn fire_rollback(&mut self) -> Option<(UserReply, NodeId)> {
        let path_b = self.pending_b.take()?;
        emit_rollback(&mut self.truth, &path_b, self.tree, &mut self.renderer).ok()
    }

    fn solved(&self) -> bool {
        self.truth.solved()
    }
}

/// Run one benchmark entry against an assistant.
///
/// The rollback correction is delivered as the reply to the first assistant
/// move at or after `entry.rollback_turn` once every prefix node has been
/// confirmed; the move it displaces is simply left unanswered.
pub fn run_session(
    entry: &ScenarioEntry,
    tree: &FaultTree,
    adapter: &dyn AssistantAdapter,
    seed: u64,
) -> SessionTranscript {
    let mut user = RuleUser::for_entry(tree, entry, seed);
    let prefix: BTreeSet<NodeId> = entry.path_a.order[..entry.prefix_len]
        .iter()
        .cloned()
        .collect();
    drive(
        tree,
        &entry.tree_id,
        adapter,
        &mut user,
        entry.max_turns,
        Some((entry.rollback_turn, prefix)),
        seed,
    )
}

/// Run a single path with no rollback; used to measure reference
/// trajectories when calibrating entries.
pub fn run_single_path_session(
    path: &FaultPath,
    tree: &FaultTree,
    tree_id: &str,
    adapter: &dyn AssistantAdapter,
    max_turns: usize,
    seed: u64,
) -> SessionTranscript {
    let mut user = RuleUser::for_path(tree, path.clone(), seed);
    drive(tree, tree_id, adapter, &mut user, max_turns, None, seed)
}

fn drive(
    tree: &FaultTree,
    tree_id: &str,
    adapter: &dyn AssistantAdapter,
    user: &mut dyn DialogueUser,
    max_turns: usize,
    rollback: Option<(usize, BTreeSet<NodeId>)>,
    seed: u64,
) -> SessionTranscript {
    let system_prompt = assistant_prompt(tree_id, tree);
    let opening = user.opening();
    let mut history = vec![ChatMessage::user(opening.clone())];
    let mut turns: Vec<TranscriptTurn> = Vec::new();
    let mut rollback_at = None;
    let mut termination = Termination::TurnLimit;
    let mut strikes = 0u32;
    let mut confirmed: BTreeSet<NodeId> = BTreeSet::from([tree.root_id().clone()]);

    for index in 1..=max_turns {
        let raw = match adapter.next_move(&system_prompt, &history) {
            Ok(raw) => raw,
            Err(e) => {
                turns.push(TranscriptTurn {
                    index,
                    raw_assistant: format!("<transport error: {e}>"),
                    mv: None,
                    reply: UserReply::invalid(),
                });
                termination = Termination::ProtocolFailure;
                break;
            }
        };

        let mv = match parse_assistant_move(&raw) {
            Ok(mv) => {
                strikes = 0;
                mv
            }
            Err(_) => {
                strikes += 1;
                let reply = UserReply::invalid();
                history.push(ChatMessage::assistant(raw.clone()));
                history.push(ChatMessage::user(
                    serde_json::to_string(&reply).expect("reply serializes"),
                ));
                turns.push(TranscriptTurn {
                    index,
                    raw_assistant: raw,
                    mv: None,
                    reply,
                });
                if strikes >= PROTOCOL_STRIKE_LIMIT {
                    termination = Termination::ProtocolFailure;
                    break;
                }
                continue;
            }
        };

        let fire_now = match &rollback {
            Some((turn, prefix)) => {
                rollback_at.is_none() && index >= *turn && prefix.is_subset(&confirmed)
            }
            None => false,
        };

        let reply = if fire_now {
            match user.fire_rollback() {
                Some((reply, _divergence)) => {
                    rollback_at = Some(index);
                    reply
                }
                None => user.step(&mv).reply,
            }
        } else {
            let out = user.step(&mv);
            if out.reply.verdict == crate::user::Verdict::True {
                note_confirmed(tree, &mut confirmed, out.queried.as_ref());
                note_confirmed(tree, &mut confirmed, out.accepted.as_ref());
            }
            out.reply
        };

        history.push(ChatMessage::assistant(raw.clone()));
        history.push(ChatMessage::user(
            serde_json::to_string(&reply).expect("reply serializes"),
        ));
        turns.push(TranscriptTurn {
            index,
            raw_assistant: raw,
            mv: Some(mv),
            reply,
        });

        if user.solved() {
            termination = Termination::Solved;
            break;
        }
    }

    SessionTranscript {
        tree_id: tree_id.to_string(),
        seed,
        system_prompt,
        opening,
        turns,
        rollback_at,
        termination,
    }
}

/// Record a confirmed node; a confirmed link also confirms its target and
/// vice versa, since they alias one failure state.
fn note_confirmed(tree: &FaultTree, confirmed: &mut BTreeSet<NodeId>, node: Option<&NodeId>) {
    let Some(id) = node else { return };
    confirmed.insert(id.clone());
    if let Some(target) = tree.resolve_link(id) {
        confirmed.insert(target.clone());
    }
    for link in tree.nodes().filter(|n| n.kind.is_link()) {
        if tree.resolve_link(&link.id) == Some(id) {
            confirmed.insert(link.id.clone());
        }
    }
}
