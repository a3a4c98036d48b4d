//! Parsing of JFTA documents.
//!
//! A document is a JSON object with exactly one top-level key (the root id)
//! whose value is a node object with the fields `NodeName`, `NextType` and
//! `NextTree`. `NextTree` is an object of child nodes for gate kinds, the
//! repair text for `Solution`, and the referenced id for `LINK`.
//!
//! Parsing checks shape only: kind tokens must be known and the payload type
//! must agree with the kind. Structural constraints (acyclicity, leaf-only
//! solutions, unique ids, non-empty gates) are the validator's job, so that
//! defective documents can still be loaded and reported on.

use indexmap::IndexMap;
use serde_json::{Map, Value};
use thiserror::Error;

use super::{FaultTree, KindRegistry, Node, NodeId, NodeKind, Payload};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("document root must be a JSON object")]
    RootNotObject,
    #[error("document has no top-level node")]
    EmptyDocument,
    #[error("document has {0} top-level nodes, expected exactly one root")]
    MultipleRoots(usize),
    #[error("node id must be a non-empty string")]
    EmptyId,
    #[error("node {id}: expected a node object")]
    NodeNotObject { id: NodeId },
    #[error("node {id}: missing field {field}")]
    MissingField { id: NodeId, field: &'static str },
    #[error("node {id}: field {field} must be a string")]
    FieldNotString { id: NodeId, field: &'static str },
    #[error("node {id}: unexpected field {field}")]
    UnexpectedField { id: NodeId, field: String },
    #[error("node {id}: unknown NextType token {token:?}")]
    UnknownKind { id: NodeId, token: String },
    #[error("node {id}: NextType {token} requires {expected}, found {found}")]
    PayloadMismatch {
        id: NodeId,
        token: String,
        expected: &'static str,
        found: &'static str,
    },
}

/// Parse a document using the standard six kinds.
pub fn parse_fault_tree(document: &str) -> Result<FaultTree, ParseError> {
    parse_with_registry(document, &KindRegistry::new())
}

/// Parse a document accepting additionally registered gate tokens.
pub fn parse_with_registry(
    document: &str,
    registry: &KindRegistry,
) -> Result<FaultTree, ParseError> {
    let value: Value = serde_json::from_str(document)?;
    let top = value.as_object().ok_or(ParseError::RootNotObject)?;
    match top.len() {
        0 => return Err(ParseError::EmptyDocument),
        1 => {}
        n => return Err(ParseError::MultipleRoots(n)),
    }
    let (root_key, root_value) = top.iter().next().expect("one entry");

    let mut nodes = IndexMap::new();
    let mut duplicates = Vec::new();
    let root_id = parse_node(root_key, root_value, registry, &mut nodes, &mut duplicates)?;
    Ok(FaultTree::from_parts(root_id, nodes, duplicates))
}

fn parse_node(
    key: &str,
    value: &Value,
    registry: &KindRegistry,
    nodes: &mut IndexMap<NodeId, Node>,
    duplicates: &mut Vec<NodeId>,
) -> Result<NodeId, ParseError> {
    if key.is_empty() {
        return Err(ParseError::EmptyId);
    }
    let id = NodeId::new(key);
    let obj = value
        .as_object()
        .ok_or_else(|| ParseError::NodeNotObject { id: id.clone() })?;

    for field in obj.keys() {
        if !matches!(field.as_str(), "NodeName" | "NextType" | "NextTree") {
            return Err(ParseError::UnexpectedField {
                id,
                field: field.clone(),
            });
        }
    }
    let name = string_field(&id, obj, "NodeName")?;
    let token = string_field(&id, obj, "NextType")?;
    let kind = registry
        .resolve(&token)
        .ok_or_else(|| ParseError::UnknownKind {
            id: id.clone(),
            token: token.clone(),
        })?;
    let next_tree = obj
        .get("NextTree")
        .ok_or_else(|| ParseError::MissingField {
            id: id.clone(),
            field: "NextTree",
        })?;

    let payload = match (&kind, next_tree) {
        (k, Value::Object(children)) if k.is_gate() => {
            Payload::Children(children.keys().map(NodeId::new).collect())
        }
        (NodeKind::Solution, Value::String(text)) => Payload::Solution(text.clone()),
        (NodeKind::Link, Value::String(target)) => {
            if target.is_empty() {
                return Err(ParseError::EmptyId);
            }
            Payload::Link(NodeId::new(target))
        }
        (k, v) => {
            return Err(ParseError::PayloadMismatch {
                id,
                token: token.clone(),
                expected: if k.is_gate() {
                    "an object of child nodes"
                } else {
                    "a string"
                },
                found: json_type(v),
            })
        }
    };

    // Parents are inserted before their children so the node table keeps
    // document (pre-order) position.
    let node = Node {
        id: id.clone(),
        name,
        kind: kind.clone(),
        payload,
    };
    if nodes.contains_key(&id) {
        duplicates.push(id.clone());
    } else {
        nodes.insert(id.clone(), node);
    }
    if let (true, Value::Object(children)) = (kind.is_gate(), next_tree) {
        for (child_key, child_value) in children {
            parse_node(child_key, child_value, registry, nodes, duplicates)?;
        }
    }
    Ok(id)
}

fn string_field(
    id: &NodeId,
    obj: &Map<String, Value>,
    field: &'static str,
) -> Result<String, ParseError> {
    match obj.get(field) {
        None => Err(ParseError::MissingField {
            id: id.clone(),
            field,
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(ParseError::FieldNotString {
            id: id.clone(),
            field,
        }),
    }
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}
