//! Benchmark entry construction and dataset plumbing.
//!
//! One entry pairs two distinct fault paths of equal difficulty that share a
//! DFS-order prefix, plus the turn at which the user will retract the first
//! path-a node beyond that prefix and switch the session to path b. The
//! rollback turn is calibrated against the reference policy's trajectory on
//! path a, so it always lands strictly after the prefix has been confirmed
//! and before the path would be solved.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphIndex;
use crate::harness::{
    assistant_prompt, run_session, run_single_path_session, OracleAdapter, Termination,
};
use crate::metrics::classify_errors;
use crate::model::{FaultTree, NodeId};
use crate::sample::{sample_path, DifficultyLevel, FaultPath};
use crate::user::{common_prefix_len, normalize, user_prompt, UserAction};

/// Seed-set draws when hunting for a path of the requested level.
const PATH_ATTEMPTS: u64 = 128;
/// Additional draws when hunting for a partner path.
const PAIR_ATTEMPTS: u64 = 96;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("tree admits no two distinct paths at level {0}")]
    LevelInfeasible(DifficultyLevel),
    #[error("no divergent partner path found within the retry budget at level {0}")]
    RetryBudgetExhausted(DifficultyLevel),
    #[error("reference trajectory did not solve path a: {0}")]
    OracleTrajectory(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset record: {0}")]
    Record(#[from] serde_json::Error),
}

/// One benchmark entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub tree_id: String,
    pub level: DifficultyLevel,
    pub path_a: FaultPath,
    pub path_b: FaultPath,
    /// Shared leading nodes of the two DFS orders; at least 1 (the root).
    pub prefix_len: usize,
    /// Dialogue turn at which the user corrects course.
    pub rollback_turn: usize,
    /// Turn budget for the session.
    pub max_turns: usize,
}

fn mix(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Draw one path of the requested level, rejection-sampling over seed sets.
fn draw_path_at_level(
    tree: &FaultTree,
    index: &GraphIndex,
    level: DifficultyLevel,
    rng: &mut ChaCha8Rng,
    attempt_seed: u64,
) -> Option<FaultPath> {
    let solutions = tree.solution_ids();
    if solutions.is_empty() {
        return None;
    }
    let range = level.cause_range();
    let k = rng.gen_range(*range.start()..=*range.end()).min(solutions.len());
    let mut picked: Vec<NodeId> = Vec::with_capacity(k);
    let mut available: Vec<&NodeId> = solutions.iter().collect();
    for _ in 0..k {
        if available.is_empty() {
            break;
        }
        let i = rng.gen_range(0..available.len());
        picked.push(available.swap_remove(i).clone());
    }
    let path = sample_path(tree, index, &picked, attempt_seed).ok()?;
    (path.level == Some(level)).then_some(path)
}

/// Build one entry: sample path a, pair it with the partner sharing the
/// longest feasible prefix, and calibrate the rollback turn.
pub fn build_entry(
    tree: &FaultTree,
    index: &GraphIndex,
    tree_id: &str,
    level: DifficultyLevel,
    rng_seed: u64,
) -> Result<ScenarioEntry, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut path_a = None;
    for attempt in 0..PATH_ATTEMPTS {
        if let Some(path) =
            draw_path_at_level(tree, index, level, &mut rng, mix(rng_seed, attempt))
        {
            path_a = Some(path);
            break;
        }
    }
    let path_a = path_a.ok_or(ScenarioError::LevelInfeasible(level))?;

    // Partner hunt: keep the candidate with the longest shared prefix that
    // still leaves a retractable path-a node beyond it.
    let mut best: Option<(usize, FaultPath)> = None;
    let mut saw_distinct = false;
    for attempt in 0..PAIR_ATTEMPTS {
        let Some(candidate) = draw_path_at_level(
            tree,
            index,
            level,
            &mut rng,
            mix(rng_seed, 0x1000 + attempt),
        ) else {
            continue;
        };
        if candidate.selected == path_a.selected {
            continue;
        }
        saw_distinct = true;
        let prefix = common_prefix_len(&path_a.order, &candidate.order);
        // The rollback needs a path-a node whose failure state flips on the
        // partner; link aliases of still-failing targets flip nothing.
        let candidate_set = candidate.failure_set();
        let retractable = path_a.order[prefix..]
            .iter()
            .any(|id| !crate::graph::counts_failed(tree, &candidate_set, id));
        if prefix == 0 || !retractable {
            continue;
        }
        if best.as_ref().map(|(p, _)| prefix > *p).unwrap_or(true) {
            best = Some((prefix, candidate));
        }
    }
    let (prefix_len, path_b) = best.ok_or(if saw_distinct {
        ScenarioError::RetryBudgetExhausted(level)
    } else {
        ScenarioError::LevelInfeasible(level)
    })?;

    let union_size = path_a.selected.union(&path_b.selected).count();
    let max_turns = 3 * union_size + 10;

    let (prefix_exhausted, solved_at) =
        reference_trajectory(tree, index, tree_id, &path_a, prefix_len, rng_seed)?;
    let low = prefix_exhausted + 1;
    let high = solved_at.max(low);
    let rollback_turn = rng.gen_range(low..=high);

    Ok(ScenarioEntry {
        tree_id: tree_id.to_string(),
        level,
        path_a,
        path_b,
        prefix_len,
        rollback_turn,
        max_turns,
    })
}

/// Run the reference policy over path a alone and report the turn at which
/// the shared prefix was fully confirmed and the turn the path was solved.
fn reference_trajectory(
    tree: &FaultTree,
    index: &GraphIndex,
    tree_id: &str,
    path_a: &FaultPath,
    prefix_len: usize,
    rng_seed: u64,
) -> Result<(usize, usize), ScenarioError> {
    let adapter = OracleAdapter::new(Arc::new(tree.clone()), Arc::new(index.clone()));
    let budget = 3 * path_a.selected.len() + 10;
    let transcript = run_single_path_session(
        path_a,
        tree,
        tree_id,
        &adapter,
        budget,
        mix(rng_seed, 0xA11C_E5EE),
    );
    if transcript.termination != Termination::Solved {
        return Err(ScenarioError::OracleTrajectory(format!(
            "terminated with {:?} after {} turns",
            transcript.termination,
            transcript.turns.len()
        )));
    }

    let prefix: Vec<&NodeId> = path_a.order[..prefix_len].iter().collect();
    let mut confirmed: Vec<&NodeId> = vec![tree.root_id()];
    let mut prefix_exhausted = 0usize;
    for turn in &transcript.turns {
        if turn.reply.verdict == crate::user::Verdict::True
            && turn.reply.action != UserAction::InvalidInput
        {
            let wanted = normalize(&turn.reply.name);
            if let Some(node) = tree.nodes().find(|n| normalize(&n.name) == wanted) {
                confirmed.push(&node.id);
                if let Some(target) = tree.resolve_link(&node.id) {
                    confirmed.push(target);
                }
                for link in tree.nodes().filter(|n| n.kind.is_link()) {
                    if tree.resolve_link(&link.id) == Some(&node.id) {
                        confirmed.push(&link.id);
                    }
                }
            }
        }
        if prefix_exhausted == 0 && prefix.iter().all(|p| confirmed.contains(p)) {
            prefix_exhausted = turn.index;
        }
    }
    if prefix_exhausted == 0 && prefix.iter().all(|p| confirmed.contains(p)) {
        prefix_exhausted = transcript.turns.len();
    }
    Ok((prefix_exhausted, transcript.turns.len()))
}

/// Requested versus produced entries for one stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub tree_id: String,
    pub level: DifficultyLevel,
    pub requested: usize,
    pub produced: usize,
}

/// Per-level aggregate of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: DifficultyLevel,
    pub count: usize,
    pub mean_assistant_prompt_chars: f64,
    pub mean_user_prompt_chars: f64,
    pub mean_turns: f64,
    pub mean_errors: f64,
}

/// Dataset summary: entry counts, prompt lengths (character proxy), and the
/// reference policy's turn and error counts per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub levels: Vec<LevelStats>,
    pub total_entries: usize,
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<6} {:>6} {:>24} {:>18} {:>18} {:>12}",
            "Level", "Size", "Assistant Prompt Chars", "User Prompt Chars", "Interaction Turns", "Error Count"
        )?;
        for level in &self.levels {
            writeln!(
                f,
                "{:<6} {:>6} {:>24.2} {:>18.2} {:>18.2} {:>12.2}",
                level.level,
                level.count,
                level.mean_assistant_prompt_chars,
                level.mean_user_prompt_chars,
                level.mean_turns,
                level.mean_errors
            )?;
        }
        write!(f, "total entries: {}", self.total_entries)
    }
}

/// Generate entries for every tree and level at the given per-stratum quota.
///
/// Returns the entries in deterministic order together with dataset
/// statistics and any per-stratum shortfalls.
pub fn emit_dataset(
    trees: &[(String, FaultTree)],
    levels: &[DifficultyLevel],
    quota_per_level: usize,
    rng_seed: u64,
) -> (Vec<ScenarioEntry>, DatasetStats, Vec<Shortfall>) {
    let mut entries = Vec::new();
    let mut shortfalls = Vec::new();
    for (tree_id, tree) in trees {
        let index = GraphIndex::build(tree);
        for &level in levels {
            let mut produced = 0usize;
            let mut seen: Vec<(FaultPath, FaultPath)> = Vec::new();
            for slot in 0..quota_per_level {
                let mut built = None;
                // A few extra salts per slot to steer around duplicates.
                for extra in 0..8u64 {
                    let salt = fnv1a(tree_id.as_bytes())
                        ^ mix(level.as_u8() as u64, slot as u64 * 8 + extra);
                    match build_entry(tree, &index, tree_id, level, mix(rng_seed, salt)) {
                        Ok(entry) => {
                            let pair = (entry.path_a.clone(), entry.path_b.clone());
                            if seen.contains(&pair) && extra < 7 {
                                continue;
                            }
                            seen.push(pair);
                            built = Some(entry);
                            break;
                        }
                        Err(_) => continue,
                    }
                }
                match built {
                    Some(entry) => {
                        entries.push(entry);
                        produced += 1;
                    }
                    // A stratum whose very first slot fails on every salt is
                    // infeasible for this tree; skip the remaining slots.
                    None if produced == 0 => break,
                    None => {}
                }
            }
            if produced < quota_per_level {
                shortfalls.push(Shortfall {
                    tree_id: tree_id.clone(),
                    level,
                    requested: quota_per_level,
                    produced,
                });
            }
        }
    }
    let stats = dataset_stats(trees, &entries, rng_seed);
    (entries, stats, shortfalls)
}

/// Compute the per-level summary of a dataset by replaying every entry with
/// the reference policy.
pub fn dataset_stats(
    trees: &[(String, FaultTree)],
    entries: &[ScenarioEntry],
    rng_seed: u64,
) -> DatasetStats {
    let by_id: BTreeMap<&str, &FaultTree> = trees
        .iter()
        .map(|(id, tree)| (id.as_str(), tree))
        .collect();

    struct Acc {
        count: usize,
        assistant_chars: f64,
        user_chars: f64,
        turns: f64,
        errors: f64,
    }
    let mut acc: BTreeMap<DifficultyLevel, Acc> = BTreeMap::new();

    for (i, entry) in entries.iter().enumerate() {
        let Some(tree) = by_id.get(entry.tree_id.as_str()) else {
            continue;
        };
        let index = GraphIndex::build(tree);
        let adapter = OracleAdapter::new(Arc::new((*tree).clone()), Arc::new(index.clone()));
        let transcript = run_session(entry, tree, &adapter, mix(rng_seed, i as u64));
        let errors = classify_errors(&transcript, entry, tree, &index).len();

        let slot = acc.entry(entry.level).or_insert(Acc {
            count: 0,
            assistant_chars: 0.0,
            user_chars: 0.0,
            turns: 0.0,
            errors: 0.0,
        });
        slot.count += 1;
        slot.assistant_chars += assistant_prompt(&entry.tree_id, tree).chars().count() as f64;
        slot.user_chars += user_prompt(&entry.tree_id, tree, &entry.path_a)
            .chars()
            .count() as f64;
        slot.turns += transcript.turns.len() as f64;
        slot.errors += errors as f64;
    }

    let levels = acc
        .into_iter()
        .map(|(level, a)| {
            let n = a.count.max(1) as f64;
            LevelStats {
                level,
                count: a.count,
                mean_assistant_prompt_chars: a.assistant_chars / n,
                mean_user_prompt_chars: a.user_chars / n,
                mean_turns: a.turns / n,
                mean_errors: a.errors / n,
            }
        })
        .collect();
    DatasetStats {
        levels,
        total_entries: entries.len(),
    }
}

/// Stratified subset: up to `per_level_per_tree` entries from every
/// (tree, level) stratum, deterministic under the seed, preserving dataset
/// order. Strata shorter than the quota are taken whole, which also makes
/// the operation idempotent.
pub fn sample_subset(
    entries: &[ScenarioEntry],
    per_level_per_tree: usize,
    rng_seed: u64,
) -> Vec<ScenarioEntry> {
    let mut strata: BTreeMap<(String, DifficultyLevel), Vec<usize>> = BTreeMap::new();
    for (i, entry) in entries.iter().enumerate() {
        strata
            .entry((entry.tree_id.clone(), entry.level))
            .or_default()
            .push(i);
    }
    let mut picked: Vec<usize> = Vec::new();
    for ((tree_id, level), mut indices) in strata {
        let stratum_seed = mix(rng_seed, fnv1a(tree_id.as_bytes()) ^ level.as_u8() as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(stratum_seed);
        // Fisher-Yates, then take the head.
        for i in (1..indices.len()).rev() {
            let j = rng.gen_range(0..=i);
            indices.swap(i, j);
        }
        indices.truncate(per_level_per_tree);
        picked.extend(indices);
    }
    picked.sort_unstable();
    picked.into_iter().map(|i| entries[i].clone()).collect()
}

/// Write entries as line-delimited JSON.
pub fn write_dataset(mut w: impl Write, entries: &[ScenarioEntry]) -> std::io::Result<()> {
    for entry in entries {
        writeln!(w, "{}", serde_json::to_string(entry)?)?;
    }
    Ok(())
}

/// Read a dataset previously written by [`write_dataset`].
pub fn read_dataset(r: impl BufRead) -> Result<Vec<ScenarioEntry>, ScenarioError> {
    let mut entries = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line)?);
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::model::parse_fault_tree;

    fn light() -> (FaultTree, GraphIndex) {
        let tree = parse_fault_tree(demo::LIGHT_TREE).unwrap();
        let index = GraphIndex::build(&tree);
        (tree, index)
    }

    #[test]
    fn level_one_entry_on_the_demo_tree() {
        let (tree, index) = light();
        let entry = build_entry(&tree, &index, "light", DifficultyLevel::One, 11).unwrap();
        assert_eq!(entry.level, DifficultyLevel::One);
        assert_eq!(entry.path_a.level, Some(DifficultyLevel::One));
        assert_eq!(entry.path_b.level, Some(DifficultyLevel::One));
        assert_ne!(entry.path_a.selected, entry.path_b.selected);
        assert!(entry.prefix_len >= 1);
        assert_eq!(
            entry.path_a.order[..entry.prefix_len],
            entry.path_b.order[..entry.prefix_len]
        );
        // A retractable node exists beyond the prefix.
        assert!(entry.path_a.order[entry.prefix_len..]
            .iter()
            .any(|id| !entry.path_b.selected.contains(id)));
        assert_eq!(
            entry.max_turns,
            3 * entry
                .path_a
                .selected
                .union(&entry.path_b.selected)
                .count()
                + 10
        );
    }

    #[test]
    fn same_seed_builds_identical_entries() {
        let (tree, index) = light();
        let a = build_entry(&tree, &index, "light", DifficultyLevel::One, 5).unwrap();
        let b = build_entry(&tree, &index, "light", DifficultyLevel::One, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_level_is_reported() {
        let tree = parse_fault_tree(
            r#"{"1": {"NodeName": "only", "NextType": "Solution", "NextTree": "fix"}}"#,
        )
        .unwrap();
        let index = GraphIndex::build(&tree);
        let err = build_entry(&tree, &index, "tiny", DifficultyLevel::One, 1).unwrap_err();
        assert!(matches!(err, ScenarioError::LevelInfeasible(_)));
    }

    #[test]
    fn entry_paths_are_oracle_consistent_and_prefix_verified() {
        use crate::sample::enumerate_consistent_sets;
        let (tree, index) = light();
        let sets = enumerate_consistent_sets(&tree, &index).unwrap();

        // The canonical level-1 pair exists among the consistent sets: the
        // two single-cause power-supply paths sharing the [1, 2, 4] prefix.
        let a: crate::graph::FailureSet = ["1", "2", "4", "8"].into_iter().collect();
        let b: crate::graph::FailureSet = ["1", "2", "4", "9"].into_iter().collect();
        assert!(sets.contains(&a) && sets.contains(&b));

        for seed in 0..8u64 {
            let entry = build_entry(&tree, &index, "light", DifficultyLevel::One, seed).unwrap();
            assert!(sets.contains(&entry.path_a.failure_set()));
            assert!(sets.contains(&entry.path_b.failure_set()));
            assert_eq!(
                common_prefix_len(&entry.path_a.order, &entry.path_b.order),
                entry.prefix_len
            );
            assert!(entry.rollback_turn >= 1);
            assert!(entry.rollback_turn <= entry.max_turns);
        }
    }

    #[test]
    fn empty_tree_list_yields_an_empty_dataset() {
        let (entries, stats, shortfalls) =
            emit_dataset(&[], &[DifficultyLevel::One], 4, 1);
        assert!(entries.is_empty());
        assert_eq!(stats.total_entries, 0);
        assert!(stats.levels.is_empty());
        assert!(shortfalls.is_empty());
    }

    #[test]
    fn quota_of_two_produces_two_entries() {
        let (tree, _) = light();
        let trees = vec![("light".to_string(), tree)];
        let (entries, stats, _) = emit_dataset(&trees, &[DifficultyLevel::One], 2, 7);
        assert_eq!(entries.len(), 2);
        assert_eq!(stats.levels[0].count, 2);
        assert_eq!(stats.levels[0].mean_errors, 0.0);
        assert!(stats.levels[0].mean_turns > 0.0);
    }

    #[test]
    fn dataset_round_trips_through_jsonl() {
        let (tree, index) = light();
        let entry = build_entry(&tree, &index, "light", DifficultyLevel::One, 3).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, std::slice::from_ref(&entry)).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, vec![entry]);
    }

    #[test]
    fn subset_is_deterministic_and_idempotent() {
        let (tree, index) = light();
        let mut entries = Vec::new();
        for seed in 0..6u64 {
            entries.push(build_entry(&tree, &index, "light", DifficultyLevel::One, seed).unwrap());
        }
        let once = sample_subset(&entries, 2, 42);
        let again = sample_subset(&entries, 2, 42);
        assert_eq!(once, again);
        assert_eq!(once.len(), 2);
        let twice = sample_subset(&once, 2, 42);
        assert_eq!(once, twice);
        assert!(sample_subset(&entries, 0, 42).is_empty());
    }
}
