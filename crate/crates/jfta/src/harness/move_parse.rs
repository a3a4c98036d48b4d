//! Extraction of the structured assistant move from raw model output.
//!
//! The protocol asks for a single JSON object with `think`, `ID` and
//! `response` fields, but real model output wraps it in prose or code
//! fences. Extraction is lenient about the surroundings and strict about
//! the object: the first well-formed JSON object carrying all three fields
//! wins; a numeric `ID` is tolerated and stringified.

use serde_json::Value;
use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Error)]
pub enum MoveParseError {
    #[error("no JSON object found in assistant output")]
    NoObjectFound,
    #[error("assistant object is missing field {0}")]
    MissingField(&'static str),
    #[error("assistant field {0} must not be empty")]
    EmptyField(&'static str),
}

/// One assistant turn: reasoning, the node being handled, and the
/// natural-language action text.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AssistantMove {
    pub think: String,
    #[serde(rename = "ID")]
    pub id: NodeId,
    pub response: String,
}

/// Parse raw assistant output into a move.
pub fn parse_assistant_move(raw: &str) -> Result<AssistantMove, MoveParseError> {
    let mut field_error: Option<MoveParseError> = None;
    let mut found_object = false;
    for candidate in json_object_candidates(raw) {
        let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(&candidate) else {
            continue;
        };
        found_object = true;
        match move_from_object(&obj) {
            Ok(mv) => return Ok(mv),
            Err(e) => field_error.get_or_insert(e),
        };
    }
    if found_object {
        Err(field_error.unwrap_or(MoveParseError::NoObjectFound))
    } else {
        Err(MoveParseError::NoObjectFound)
    }
}

fn move_from_object(
    obj: &serde_json::Map<String, Value>,
) -> Result<AssistantMove, MoveParseError> {
    let think = match obj.get("think") {
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
        None => return Err(MoveParseError::MissingField("think")),
    };
    let id = match obj.get("ID") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) | None => return Err(MoveParseError::MissingField("ID")),
    };
    let response = match obj.get("response") {
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
        None => return Err(MoveParseError::MissingField("response")),
    };
    if id.is_empty() {
        return Err(MoveParseError::EmptyField("ID"));
    }
    if response.is_empty() {
        return Err(MoveParseError::EmptyField("response"));
    }
    Ok(AssistantMove {
        think,
        id: NodeId::new(id),
        response,
    })
}

/// Balanced `{...}` spans of the text, left to right, skipping braces inside
/// JSON string literals. Nested objects are only yielded as part of their
/// outermost span.
fn json_object_candidates(raw: &str) -> Vec<String> {
    let bytes = raw.as_bytes();
    let mut candidates = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'{' {
            i += 1;
            continue;
        }
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut end = None;
        for (offset, &b) in bytes[i..].iter().enumerate() {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i + offset);
                        break;
                    }
                }
                _ => {}
            }
        }
        match end {
            Some(end) => {
                candidates.push(raw[i..=end].to_string());
                i = end + 1;
            }
            None => break,
        }
    }
    candidates
}
