//! A small built-in demo tree used across the documentation and tests.
//!
//! The tree models a light that fails to turn on. It exercises every node
//! kind: an XOR root over mutually exclusive switch states, OR gates, a
//! Fault wrapper around an intermediate issue, solution leaves, and two LINK
//! nodes that alias the power-supply branch and one of its leaves.

/// Document text of the demo tree (15 nodes).
pub const LIGHT_TREE: &str = include_str!("../assets/light.jfta");
