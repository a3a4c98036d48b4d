//! Transcript persistence: line-delimited JSON, self-contained for scoring.
//!
//! The first record carries the session header together with the entry and
//! the tree document, one record follows per turn, and a final record states
//! the outcome. A transcript file can therefore be scored on its own.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{parse_fault_tree, FaultTree, ParseError};
use crate::scenario::ScenarioEntry;
use crate::user::UserReply;

use super::{AssistantMove, SessionTranscript, Termination, TranscriptTurn};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed transcript record: {0}")]
    Record(#[from] serde_json::Error),
    #[error("embedded tree does not parse: {0}")]
    Tree(#[from] ParseError),
    #[error("transcript is missing its {0} record")]
    Missing(&'static str),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Session {
        tree_id: String,
        seed: u64,
        system_prompt: String,
        opening: String,
        entry: Box<ScenarioEntry>,
        tree: String,
    },
    Turn {
        index: usize,
        raw: String,
        #[serde(rename = "move")]
        mv: Option<AssistantMove>,
        reply: UserReply,
    },
    End {
        termination: Termination,
        rollback_at: Option<usize>,
        turns: usize,
    },
}

/// A transcript re-loaded together with its entry and tree.
#[derive(Debug, Clone)]
pub struct LoadedSession {
    pub transcript: SessionTranscript,
    pub entry: ScenarioEntry,
    pub tree: FaultTree,
}

/// Persist one session as line-delimited records.
pub fn write_transcript(
    mut w: impl Write,
    transcript: &SessionTranscript,
    entry: &ScenarioEntry,
    tree: &FaultTree,
) -> std::io::Result<()> {
    let header = Record::Session {
        tree_id: transcript.tree_id.clone(),
        seed: transcript.seed,
        system_prompt: transcript.system_prompt.clone(),
        opening: transcript.opening.clone(),
        entry: Box::new(entry.clone()),
        tree: tree.serialize(),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for turn in &transcript.turns {
        let record = Record::Turn {
            index: turn.index,
            raw: turn.raw_assistant.clone(),
            mv: turn.mv.clone(),
            reply: turn.reply.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&record)?)?;
    }
    let end = Record::End {
        termination: transcript.termination,
        rollback_at: transcript.rollback_at,
        turns: transcript.turns.len(),
    };
    writeln!(w, "{}", serde_json::to_string(&end)?)
}

/// Load a session previously written by [`write_transcript`].
pub fn read_transcript(r: impl BufRead) -> Result<LoadedSession, TranscriptError> {
    let mut header: Option<(String, u64, String, String, Box<ScenarioEntry>, String)> = None;
    let mut turns = Vec::new();
    let mut end: Option<(Termination, Option<usize>)> = None;

    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Record>(&line)? {
            Record::Session {
                tree_id,
                seed,
                system_prompt,
                opening,
                entry,
                tree,
            } => header = Some((tree_id, seed, system_prompt, opening, entry, tree)),
            Record::Turn {
                index,
                raw,
                mv,
                reply,
            } => turns.push(TranscriptTurn {
                index,
                raw_assistant: raw,
                mv,
                reply,
            }),
            Record::End {
                termination,
                rollback_at,
                ..
            } => end = Some((termination, rollback_at)),
        }
    }

    let (tree_id, seed, system_prompt, opening, entry, tree_doc) =
        header.ok_or(TranscriptError::Missing("session"))?;
    let (termination, rollback_at) = end.ok_or(TranscriptError::Missing("end"))?;
    let tree = parse_fault_tree(&tree_doc)?;
    Ok(LoadedSession {
        transcript: SessionTranscript {
            tree_id,
            seed,
            system_prompt,
            opening,
            turns,
            rollback_at,
            termination,
        },
        entry: *entry,
        tree,
    })
}
