//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its runtime (run with `--nocapture` to see them).

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use jfta::demo;
use jfta::graph::GraphIndex;
use jfta::harness::{run_session, AssistantMove, OracleAdapter, SessionTranscript, Termination, TranscriptTurn};
use jfta::metrics::{classify_errors, length_stats, to_node_edge, ErrorKind};
use jfta::model::{parse_fault_tree, validate, FaultTree, NodeId};
use jfta::sample::{
    dfs_order, enumerate_consistent_sets, sample_random_path, DifficultyLevel, FaultPath,
    RootCause,
};
use jfta::scenario::{emit_dataset, sample_subset, ScenarioEntry};
use jfta::user::{step_user, GroundTruth, UserAction, UserReply, VagueRenderer, Verdict};

fn report(criterion: &str, started: Instant, budget: Duration, detail: &str) {
    let elapsed = started.elapsed();
    println!(
        "criterion {criterion}: PASS — {detail} ({:.2}s, budget {:.0}s)",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(
        elapsed < budget,
        "criterion {criterion} exceeded its runtime budget: {elapsed:?} >= {budget:?}"
    );
}

fn id(s: &str) -> NodeId {
    NodeId::new(s)
}

type CorpusDataset = (Vec<(String, FaultTree)>, Vec<ScenarioEntry>);

/// Shared corpus dataset: every corpus tree, all three levels.
fn corpus_dataset() -> &'static CorpusDataset {
    static DATASET: OnceLock<CorpusDataset> = OnceLock::new();
    DATASET.get_or_init(|| {
        let trees = common::corpus();
        let (entries, _stats, _shortfalls) =
            emit_dataset(&trees, &DifficultyLevel::ALL, 12, 0x1A2B_3C4D);
        (trees, entries)
    })
}

#[test]
fn criterion_1_jfta_conformance() {
    let started = Instant::now();

    let tree = parse_fault_tree(demo::LIGHT_TREE).unwrap();
    assert_eq!(tree.len(), 15);
    let counts = tree.kind_counts();
    assert_eq!(counts.get("XOR"), Some(&1));
    assert_eq!(counts.get("OR"), Some(&3));
    assert_eq!(counts.get("Fault"), Some(&1));
    assert_eq!(counts.get("Solution"), Some(&8));
    assert_eq!(counts.get("LINK"), Some(&2));

    assert!(validate(&tree).is_valid());

    let text = tree.serialize();
    let reparsed = parse_fault_tree(&text).unwrap();
    assert_eq!(text, reparsed.serialize(), "round trip must be stable");
    assert_eq!(tree, reparsed);

    report(
        "1",
        started,
        Duration::from_secs(1),
        "demo document: 15 nodes (1 XOR, 3 OR, 1 Fault, 8 Solution, 2 LINK), clean validation, byte-stable round trip",
    );
}

#[test]
fn criterion_2_validator_mutation_suite() {
    let started = Instant::now();

    // Clean bases stay clean.
    for (label, tree) in common::corpus() {
        let report = validate(&tree);
        assert!(report.is_valid(), "base tree {label} reported: {report}");
    }

    let mutants = common::mutants();
    assert!(mutants.len() >= 25, "need at least 25 mutants, have {}", mutants.len());

    let mut per_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for mutant in &mutants {
        let report = validate(&mutant.tree);
        let slot = per_class
            .entry(format!("{:?}", mutant.expected))
            .or_insert((0, 0));
        slot.1 += 1;
        assert!(
            report.has(mutant.expected),
            "mutant {} must trigger {:?}, got: {report}",
            mutant.label,
            mutant.expected
        );
        slot.0 += 1;
    }
    assert_eq!(per_class.len(), 5, "five defect classes expected");

    let detail = format!(
        "{} mutants over {} defect classes, all detected",
        mutants.len(),
        per_class.len()
    );
    report("2", started, Duration::from_secs(5), &detail);
}

#[test]
fn criterion_3_sampling_soundness() {
    let started = Instant::now();

    let corpus = common::corpus();
    assert!(corpus.len() >= 10);

    // The corpus jointly covers every standard kind.
    let mut kinds: BTreeSet<String> = BTreeSet::new();
    for (_, tree) in &corpus {
        kinds.extend(tree.kind_counts().keys().cloned());
    }
    for kind in ["XOR", "OR", "AND", "Fault", "Solution", "LINK"] {
        assert!(kinds.contains(kind), "corpus lacks {kind} coverage");
    }

    let mut total_runs = 0usize;
    for (label, tree) in &corpus {
        assert!(tree.len() <= 20, "{label} exceeds the enumeration bound");
        let index = GraphIndex::build(tree);
        let sets = enumerate_consistent_sets(tree, &index).unwrap();
        let universe: BTreeSet<_> = sets.iter().cloned().collect();

        for run in 0..1000u64 {
            let path = sample_random_path(tree, &index, 6, run)
                .unwrap_or_else(|e| panic!("{label} run {run}: {e}"));
            assert!(
                universe.contains(&path.failure_set()),
                "{label} run {run}: sampled set is not gate-consistent: {:?}",
                path.selected
            );
            for seed in &path.seed_failures {
                assert!(path.selected.contains(seed), "{label}: seed inclusion");
            }
            for node_id in &path.selected {
                let node = tree.node(node_id).unwrap();
                if node.kind.gate_logic() == Some(jfta::model::GateLogic::And) {
                    for child in node.child_ids() {
                        assert!(
                            path.selected.contains(child),
                            "{label}: AND totality at {node_id}"
                        );
                    }
                }
            }
            total_runs += 1;
        }

        // Determinism spot check on this tree.
        let a = sample_random_path(tree, &index, 6, 7).unwrap();
        let b = sample_random_path(tree, &index, 6, 7).unwrap();
        assert_eq!(a, b, "{label}: identical seeds must reproduce the path");
    }

    let detail = format!(
        "{} trees x 1000 seeded runs ({} total): membership, seed inclusion, AND totality all hold",
        corpus.len(),
        total_runs
    );
    report("3", started, Duration::from_secs(120), &detail);
}

#[test]
fn criterion_4_closed_loop_soundness() {
    let started = Instant::now();

    let (trees, entries) = corpus_dataset();
    assert!(
        entries.len() >= 300,
        "need at least 300 entries, generated {}",
        entries.len()
    );
    let levels: BTreeSet<DifficultyLevel> = entries.iter().map(|e| e.level).collect();
    assert_eq!(levels.len(), 3, "entries must span all three levels");

    let by_id: BTreeMap<&str, (Arc<FaultTree>, Arc<GraphIndex>)> = trees
        .iter()
        .map(|(tree_id, tree)| {
            let tree = Arc::new(tree.clone());
            let index = Arc::new(GraphIndex::build(&tree));
            (tree_id.as_str(), (tree, index))
        })
        .collect();

    let mut rollbacks = 0usize;
    for (i, entry) in entries.iter().enumerate() {
        let (tree, index) = &by_id[entry.tree_id.as_str()];
        let adapter = OracleAdapter::new(tree.clone(), index.clone());
        let transcript = run_session(entry, tree, &adapter, 0xC0FFEE ^ i as u64);
        assert_eq!(
            transcript.termination,
            Termination::Solved,
            "entry {i} ({} level {}) not solved in {} turns (max {})",
            entry.tree_id,
            entry.level,
            transcript.turns.len(),
            entry.max_turns
        );
        assert!(transcript.turns.len() <= entry.max_turns);
        assert!(
            transcript.rollback_at.is_some(),
            "entry {i}: rollback never fired"
        );
        rollbacks += 1;
        let events = classify_errors(&transcript, entry, tree, index);
        assert!(
            events.is_empty(),
            "entry {i} ({} level {}): reference policy produced error events: {events:?}",
            entry.tree_id,
            entry.level
        );
    }

    let detail = format!(
        "{} entries across levels 1-3 solved 100% with {} rollbacks and zero error events",
        entries.len(),
        rollbacks
    );
    report("4", started, Duration::from_secs(300), &detail);
}

/// Wrap an enumerated consistent set as a path, the way sampled paths are
/// shaped: DFS order from the root, solution members as root causes.
fn path_from_set(tree: &FaultTree, set: jfta::graph::FailureSet) -> FaultPath {
    let order = dfs_order(tree, &set);
    let root_causes: Vec<RootCause> = tree
        .nodes()
        .filter(|n| n.kind.is_solution() && set.contains(&n.id))
        .map(|n| RootCause {
            id: n.id.clone(),
            solution_text: n.solution_text().unwrap_or_default().to_string(),
        })
        .collect();
    let seed_failures = root_causes.iter().map(|c| c.id.clone()).collect();
    FaultPath {
        selected: set.0,
        order,
        root_causes,
        seed_failures,
        level: None,
    }
}

fn mv(node_id: &str, response: &str) -> AssistantMove {
    AssistantMove {
        think: "grid".into(),
        id: id(node_id),
        response: response.into(),
    }
}

/// The exhaustive move grid on one tree: every node queried as a fault,
/// every solution proposed with the right text, a wrong text and a wrong id,
/// plus three protocol-hacking shapes.
fn move_grid(tree: &FaultTree) -> Vec<AssistantMove> {
    let mut moves = Vec::new();
    for node in tree.nodes() {
        moves.push(mv(
            node.id.as_str(),
            &format!("Could you check the {}?", node.name),
        ));
    }
    let solutions: Vec<_> = tree
        .nodes()
        .filter(|n| n.kind.is_solution())
        .collect();
    for (i, node) in solutions.iter().enumerate() {
        let text = node.solution_text().unwrap_or_default();
        let other = solutions[(i + 1) % solutions.len()];
        moves.push(mv(
            node.id.as_str(),
            &format!("The {} can be resolved by: {}.", node.name, text),
        ));
        moves.push(mv(
            node.id.as_str(),
            &format!(
                "The {} can be resolved by: {}.",
                node.name,
                other.solution_text().unwrap_or_default()
            ),
        ));
        moves.push(mv(
            other.id.as_str(),
            &format!("The {} can be resolved by: {}.", node.name, text),
        ));
    }
    // Hacking shapes: multi-fault probing, fishing without a target, and a
    // remedy aimed at a gate.
    moves.push(mv(
        "6",
        "Is it the Bulb Issue, or rather the Switch Broken case? Tell me everything that is failing.",
    ));
    moves.push(mv("1", "I believe everything is handled now. Anything else?"));
    moves.push(mv(
        "2",
        "The Switch Closed can be resolved by: Connect power.",
    ));
    moves
}

/// Decision reference written directly from the reply rules, sharing no code
/// with the library: its own normalization, name scan, remedy detection and
/// verdict logic.
fn reference_user_decision(
    tree: &FaultTree,
    mv: &AssistantMove,
    truth: &GroundTruth,
) -> (String, String, String) {
    fn canon(s: &str) -> String {
        s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
    }
    let invalid = || {
        (
            "Invalid Input".to_string(),
            String::new(),
            String::new(),
        )
    };
    let verdict_str = |b: bool| if b { "True".to_string() } else { "False".to_string() };

    let response = canon(&mv.response);

    // Rule: the move must concern exactly one named node. Names contained in
    // a longer matched name are shadowed by it.
    let mut matched: Vec<String> = Vec::new();
    for node in tree.nodes() {
        let name = canon(&node.name);
        if !name.is_empty() && response.contains(&name) && !matched.contains(&name) {
            matched.push(name);
        }
    }
    let survivors: Vec<&String> = matched
        .iter()
        .filter(|name| !matched.iter().any(|o| o != *name && o.contains(name.as_str())))
        .collect();
    if survivors.len() != 1 {
        return invalid();
    }
    let target = survivors[0].clone();

    // Rule: operational steps mark a solution confirmation.
    let cue_words = [
        "resolved by", "can be fixed", "solution", "recommend", "repair", "replace", "install",
        "apply",
    ];
    let mut is_remedy = cue_words.iter().any(|c| response.contains(c));
    for node in tree.nodes() {
        if let Some(text) = node.solution_text() {
            let text = canon(text);
            if !text.is_empty() && response.contains(&text) {
                is_remedy = true;
            }
        }
    }

    let named: Vec<_> = tree
        .nodes()
        .filter(|n| canon(&n.name) == target)
        .collect();
    let id_node = tree.node(&mv.id).filter(|n| canon(&n.name) == target);
    let display = id_node
        .or(named.first().copied())
        .map(|n| n.name.clone())
        .unwrap_or_default();

    if is_remedy {
        // Rule: the object of a solution confirmation must be a bottom-level
        // fault; otherwise the move is invalid input.
        if !named.iter().any(|n| n.kind.is_solution()) {
            return invalid();
        }
        let accepted = match id_node {
            Some(node) => truth
                .active
                .root_causes
                .iter()
                .find(|c| c.id == node.id)
                .filter(|_| !truth.resolved.contains(&node.id))
                .map(|c| response.contains(&canon(&c.solution_text)))
                .unwrap_or(false),
            None => false,
        };
        return (
            "Solution Confirmation".to_string(),
            display,
            verdict_str(accepted),
        );
    }

    // Fault confirmation: True exactly when id and name match a node of the
    // active path; a link answers for its final target.
    let on_path = match id_node {
        Some(node) => {
            if truth.active.selected.contains(&node.id) {
                true
            } else {
                let mut current = node;
                let mut hops = 0;
                loop {
                    match current.link_target() {
                        Some(target_id) if hops <= tree.len() => {
                            hops += 1;
                            match tree.node(target_id) {
                                Some(next) => {
                                    if !next.kind.is_link() {
                                        break truth.active.selected.contains(&next.id);
                                    }
                                    current = next;
                                }
                                None => break false,
                            }
                        }
                        _ => break false,
                    }
                }
            }
        }
        None => false,
    };
    (
        "Fault Confirmation".to_string(),
        display,
        verdict_str(on_path),
    )
}

fn reply_triple(reply: &UserReply) -> (String, String, String) {
    let action = match reply.action {
        UserAction::FaultConfirmation => "Fault Confirmation",
        UserAction::SolutionConfirmation => "Solution Confirmation",
        UserAction::InvalidInput => "Invalid Input",
    };
    let verdict = match reply.verdict {
        Verdict::True => "True",
        Verdict::False => "False",
        Verdict::Empty => "",
    };
    (action.to_string(), reply.name.clone(), verdict.to_string())
}

#[test]
fn criterion_5_user_decision_oracle_equivalence() {
    let started = Instant::now();

    let tree = parse_fault_tree(demo::LIGHT_TREE).unwrap();
    let index = GraphIndex::build(&tree);
    let truths: Vec<FaultPath> = enumerate_consistent_sets(&tree, &index)
        .unwrap()
        .into_iter()
        .map(|set| path_from_set(&tree, set))
        .collect();
    assert!(!truths.is_empty());
    let moves = move_grid(&tree);

    let mut cases = 0usize;
    for path in &truths {
        for pre_resolve in [false, true] {
            let mut base = GroundTruth::for_path(path.clone());
            if pre_resolve {
                if let Some(first) = path.root_causes.first() {
                    base.resolved.insert(first.id.clone());
                }
            }
            for m in &moves {
                let mut truth = base.clone();
                let mut renderer = VagueRenderer::new(0);
                let out = step_user(m, &mut truth, &tree, &mut renderer);
                let got = reply_triple(&out.reply);
                let expected = reference_user_decision(&tree, m, &base);
                assert_eq!(
                    got, expected,
                    "decision mismatch for move {:?} on truth {:?} (pre_resolve {pre_resolve})",
                    m.response, path.selected
                );
                cases += 1;
            }
        }
    }

    let detail = format!(
        "{} (move x truth) cases agree with the independently coded rule reference (100%)",
        cases
    );
    report("5", started, Duration::from_secs(30), &detail);
}

fn manual_path(tree: &FaultTree, ids: &[&str]) -> FaultPath {
    let set: jfta::graph::FailureSet = ids.iter().copied().collect();
    path_from_set(tree, set)
}

fn fixture_entry(tree: &FaultTree, rollback_turn: usize) -> ScenarioEntry {
    let path_a = manual_path(tree, &["1", "2", "4", "8"]);
    let path_b = manual_path(tree, &["1", "2", "4", "9"]);
    ScenarioEntry {
        tree_id: "light".into(),
        level: DifficultyLevel::One,
        path_a,
        path_b,
        prefix_len: 3,
        rollback_turn,
        max_turns: 25,
    }
}

fn fixture_turn(
    index: usize,
    node_id: &str,
    response: &str,
    action: UserAction,
    name: &str,
    verdict: Verdict,
) -> TranscriptTurn {
    let mv = AssistantMove {
        think: String::new(),
        id: id(node_id),
        response: response.to_string(),
    };
    TranscriptTurn {
        index,
        raw_assistant: serde_json::to_string(&mv).unwrap(),
        mv: Some(mv),
        reply: UserReply {
            action,
            name: name.to_string(),
            verdict,
            response: "fixture".into(),
        },
    }
}

fn fixture_transcript(
    turns: Vec<TranscriptTurn>,
    rollback_at: Option<usize>,
) -> SessionTranscript {
    SessionTranscript {
        tree_id: "light".into(),
        seed: 0,
        system_prompt: String::new(),
        opening: String::new(),
        turns,
        rollback_at,
        termination: Termination::TurnLimit,
    }
}

#[test]
fn criterion_6_error_taxonomy_fixtures() {
    let started = Instant::now();

    let tree = parse_fault_tree(demo::LIGHT_TREE).unwrap();
    let index = GraphIndex::build(&tree);
    use ErrorKind::*;
    use UserAction::*;
    use Verdict::*;

    let q = |i: usize, node: &str, name: &str, v: Verdict| {
        fixture_turn(
            i,
            node,
            &format!("Could you check the {name}?"),
            FaultConfirmation,
            name,
            v,
        )
    };

    // (label, rollback_turn, rollback_at, turns, expected events)
    type Fixture = (
        &'static str,
        usize,
        Option<usize>,
        Vec<TranscriptTurn>,
        Vec<(ErrorKind, usize)>,
    );
    let fixtures: Vec<Fixture> = vec![
        (
            "graph: queried id does not exist",
            20,
            None,
            vec![fixture_turn(
                1,
                "99",
                "Could you check the Power Supply Issue?",
                FaultConfirmation,
                "Power Supply Issue",
                False,
            )],
            vec![(Graph, 1)],
        ),
        (
            "graph: id and name disagree",
            20,
            None,
            vec![fixture_turn(
                1,
                "9",
                "Could you check the Power not connected?",
                FaultConfirmation,
                "Power not connected",
                False,
            )],
            vec![(Graph, 1)],
        ),
        (
            "graph: query below a refuted branch",
            20,
            None,
            vec![
                q(1, "2", "Switch Closed", True),
                q(2, "4", "Power Supply Issue", False),
                q(3, "8", "Power not connected", False),
            ],
            vec![(Graph, 3)],
        ),
        (
            "plan: re-query after a True answer",
            20,
            None,
            vec![
                q(1, "2", "Switch Closed", True),
                q(2, "2", "Switch Closed", True),
            ],
            vec![(Plan, 2)],
        ),
        (
            "plan: re-query after a False answer",
            20,
            None,
            vec![
                q(1, "2", "Switch Closed", False),
                q(2, "2", "Switch Closed", False),
            ],
            vec![(Plan, 2)],
        ),
        (
            "plan: one re-verification after rollback is free, the second is not",
            2,
            Some(2),
            vec![
                q(1, "2", "Switch Closed", True),
                // Displaced query; the user answers with the correction.
                q(2, "4", "Power not connected", False),
                q(3, "2", "Switch Closed", True),
                q(4, "2", "Switch Closed", True),
            ],
            vec![(Plan, 4)],
        ),
        (
            "solution: wrong repair text",
            20,
            None,
            vec![
                q(1, "2", "Switch Closed", True),
                q(2, "4", "Power Supply Issue", True),
                q(3, "8", "Power not connected", True),
                fixture_turn(
                    4,
                    "8",
                    "The Power not connected can be resolved by: Install transformer.",
                    SolutionConfirmation,
                    "Power not connected",
                    False,
                ),
            ],
            vec![(Solution, 4)],
        ),
        (
            "solution: remedy aimed at a gate id",
            20,
            None,
            vec![fixture_turn(
                1,
                "4",
                "The Power Supply Issue can be resolved by: Connect power.",
                InvalidInput,
                "",
                Empty,
            )],
            vec![(Solution, 1)],
        ),
        (
            "solution: remedy for an off-path leaf",
            20,
            None,
            vec![
                q(1, "2", "Switch Closed", True),
                fixture_turn(
                    2,
                    "6",
                    "The Bulb Issue can be fixed: Replace bulb.",
                    SolutionConfirmation,
                    "Bulb Issue",
                    False,
                ),
            ],
            vec![(Solution, 2)],
        ),
        (
            "path: leaving an unfinished subtree",
            20,
            None,
            vec![
                q(1, "2", "Switch Closed", True),
                q(2, "4", "Power Supply Issue", True),
                q(3, "7", "Switch Broken", False),
            ],
            vec![(Path, 3)],
        ),
        (
            "path: wandering off while a confirmed cause is unsolved",
            20,
            None,
            vec![
                q(1, "2", "Switch Closed", True),
                q(2, "4", "Power Supply Issue", True),
                q(3, "8", "Power not connected", True),
                q(4, "6", "Bulb Issue", False),
            ],
            vec![(Path, 4)],
        ),
        (
            "path: first probe after rollback ignores the divergence region",
            2,
            Some(2),
            vec![
                q(1, "2", "Switch Closed", True),
                q(2, "4", "Power not connected", False),
                q(3, "11", "Wire breakage", False),
            ],
            vec![(Path, 3)],
        ),
    ];

    assert_eq!(fixtures.len(), 12);
    let mut per_kind: BTreeMap<ErrorKind, usize> = BTreeMap::new();
    for (label, rollback_turn, rollback_at, turns, expected) in fixtures {
        let entry = fixture_entry(&tree, rollback_turn);
        let transcript = fixture_transcript(turns, rollback_at);
        let events = classify_errors(&transcript, &entry, &tree, &index);
        let got: Vec<(ErrorKind, usize)> = events.iter().map(|e| (e.kind, e.turn)).collect();
        assert_eq!(got, expected, "fixture {label:?}: {events:?}");
        for (kind, _) in &expected {
            *per_kind.entry(*kind).or_insert(0) += 1;
        }
    }
    assert!(per_kind.values().all(|&n| n == 3), "three fixtures per kind");

    report(
        "6",
        started,
        Duration::from_secs(30),
        "12 hand-built transcripts (3 per kind) classify exactly as expected under Graph > Plan > Solution > Path",
    );
}

#[test]
fn criterion_7_representation_ablation_echo() {
    let started = Instant::now();

    let mut ratios = Vec::new();
    for (label, tree) in common::corpus() {
        let index = GraphIndex::build(&tree);
        let doc = to_node_edge(&tree);
        let rebuilt = doc.children_map();
        for node in tree.nodes() {
            assert_eq!(
                rebuilt.get(&node.id).map(Vec::as_slice).unwrap_or(&[]),
                index.children(&node.id),
                "{label}: resolved DAG diverges at {}",
                node.id
            );
        }
        let stats = length_stats(&tree);
        assert!(
            stats.ratio > 1.0,
            "{label}: node-edge form must be longer, ratio {}",
            stats.ratio
        );
        ratios.push(stats.ratio);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let detail = format!(
        "{} trees DAG-isomorphic after conversion; node-edge/jfta length ratio > 1 on every tree (mean {:.2})",
        ratios.len(),
        mean
    );
    report("7", started, Duration::from_secs(30), &detail);
}

#[test]
fn criterion_8_subset_stratification() {
    let started = Instant::now();

    let (_, entries) = corpus_dataset();
    assert!(entries.len() >= 300);

    let mut strata: BTreeMap<(String, DifficultyLevel), usize> = BTreeMap::new();
    for entry in entries.iter() {
        *strata
            .entry((entry.tree_id.clone(), entry.level))
            .or_insert(0) += 1;
    }
    let per_level: BTreeMap<DifficultyLevel, usize> =
        entries.iter().fold(BTreeMap::new(), |mut acc, e| {
            *acc.entry(e.level).or_insert(0) += 1;
            acc
        });

    let take = 4usize;
    for seed in 0..20u64 {
        let subset = sample_subset(entries, take, seed);
        // Exact per-stratum counts: min(take, stratum size).
        let mut got: BTreeMap<(String, DifficultyLevel), usize> = BTreeMap::new();
        for entry in &subset {
            *got.entry((entry.tree_id.clone(), entry.level)).or_insert(0) += 1;
        }
        for (key, &available) in &strata {
            let expected = available.min(take);
            assert_eq!(
                got.get(key).copied().unwrap_or(0),
                expected,
                "seed {seed}: stratum {key:?}"
            );
        }
        // Per-level proportions within one entry per stratum of the ideal.
        let subset_total = subset.len() as f64;
        let full_total = entries.len() as f64;
        for (level, &full_count) in &per_level {
            let got_level = subset.iter().filter(|e| e.level == *level).count() as f64;
            let ideal = subset_total * full_count as f64 / full_total;
            let strata_of_level = strata.keys().filter(|(_, l)| l == level).count() as f64;
            assert!(
                (got_level - ideal).abs() <= strata_of_level,
                "seed {seed}: level {level} proportion drifted: got {got_level}, ideal {ideal:.1}"
            );
        }
    }

    let detail = format!(
        "20 seeds x stratified subsets of {} entries keep exact per-stratum quotas and level proportions",
        entries.len()
    );
    report("8", started, Duration::from_secs(60), &detail);
}
