//! Serialization back to document text.
//!
//! Child order is emitted exactly as stored, so for any tree built from a
//! document, parse-then-serialize reproduces the structure (round-trip
//! identity). Output is indented with single spaces.

use serde::Serialize;
use serde_json::{ser::PrettyFormatter, Map, Serializer, Value};

use super::{FaultTree, Node, NodeId, Payload};

impl FaultTree {
    /// Render the tree as JFTA document text.
    pub fn serialize(&self) -> String {
        let mut top = Map::new();
        top.insert(self.root_id().to_string(), self.node_value(self.root_id()));
        let value = Value::Object(top);

        let mut buf = Vec::new();
        let formatter = PrettyFormatter::with_indent(b" ");
        let mut ser = Serializer::with_formatter(&mut buf, formatter);
        value.serialize(&mut ser).expect("in-memory serialization");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    fn node_value(&self, id: &NodeId) -> Value {
        let Some(node) = self.node(id) else {
            return Value::Null;
        };
        let mut obj = Map::new();
        obj.insert("NodeName".into(), Value::String(node.name.clone()));
        obj.insert(
            "NextType".into(),
            Value::String(node.kind.token().to_string()),
        );
        obj.insert("NextTree".into(), self.payload_value(node));
        Value::Object(obj)
    }

    fn payload_value(&self, node: &Node) -> Value {
        match &node.payload {
            Payload::Children(ids) => {
                let mut children = Map::new();
                for child in ids {
                    children.insert(child.to_string(), self.node_value(child));
                }
                Value::Object(children)
            }
            Payload::Solution(text) => Value::String(text.clone()),
            Payload::Link(target) => Value::String(target.to_string()),
        }
    }
}
