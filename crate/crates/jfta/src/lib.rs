//! Fault-tree diagnosis toolkit.
//!
//! The crate covers the full pipeline for evaluating diagnosis assistants on
//! textual fault trees:
//!
//! * [`model`]: the JFTA document format; parse, validate, serialize.
//! * [`graph`]: parent/child indexes over the resolved DAG and
//!   gate-semantics checking of failure sets.
//! * [`sample`]: gate-consistent fault-path sampling with a brute-force
//!   enumeration oracle and difficulty classification.
//! * [`scenario`]: benchmark entries (same-difficulty path pairs sharing a
//!   prefix, with a rollback trigger), dataset emission, statistics, and
//!   stratified subsets.
//! * [`user`]: a deterministic rule-based user simulator that renders vague
//!   replies and fires rollback corrections.
//! * [`harness`]: the turn loop between an assistant (built-in reference
//!   policy or an external chat endpoint) and the user simulator.
//! * [`metrics`]: error-taxonomy scoring of transcripts, aggregation, and
//!   the node-edge baseline representation.
//!
//! The `jfta` CLI in this workspace exposes the same pipeline as subcommands.
//! The guide under `book/` walks through each concept with runnable snippets.

pub mod demo;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod sample;
pub mod scenario;
pub mod user;

// The guide's code blocks compile and run as doc-tests so the book cannot
// drift from the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(format, "../../../book/src/format.md");
    chapter!(validation, "../../../book/src/validation.md");
    chapter!(gates, "../../../book/src/gates.md");
    chapter!(sampling, "../../../book/src/sampling.md");
    chapter!(scenarios, "../../../book/src/scenarios.md");
    chapter!(user_simulator, "../../../book/src/user-simulator.md");
    chapter!(dialogue, "../../../book/src/dialogue.md");
    chapter!(scoring, "../../../book/src/scoring.md");
    chapter!(cli, "../../../book/src/cli.md");
}
