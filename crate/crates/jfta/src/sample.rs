//! Gate-consistent fault-path sampling.
//!
//! A fault path is built bottom-up from a set of initial solution-leaf
//! failures: each seed walks up to the root choosing one parent at random
//! wherever the DAG offers several, then every selected AND-like gate expands
//! until all of its children are failed, which may pull in further solution
//! leaves. The fixpoint of that expansion, in depth-first order from the
//! root, is the path.
//!
//! XOR gates are never expanded; if the expanded set ends up violating XOR
//! exclusivity the whole sample is redrawn under a derived seed, up to a
//! bounded number of retries.
//!
//! [`enumerate_consistent_sets`] is the brute-force oracle used by the test
//! suite: on small trees it enumerates every gate-consistent failure set
//! containing the root, so sampled paths can be checked for membership.

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexSet;
use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{gate_semantics_check, FailureSet, GraphIndex};
use crate::model::{FaultTree, GateLogic, NodeId};

/// Retries before a sample is abandoned as XOR-inconsistent.
pub const SAMPLE_RETRY_BUDGET: u64 = 64;

/// Node-count bound for the enumeration oracle.
pub const MAX_ENUM_NODES: usize = 20;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("seed set is empty")]
    EmptySeedSet,
    #[error("seed {0} is not a node of the tree")]
    UnknownSeed(NodeId),
    #[error("seed {0} is not a SOLUTION leaf")]
    SeedNotSolution(NodeId),
    #[error("seed combination admits no gate-consistent superset (conflicting XOR arms)")]
    UnsatisfiableSeeds,
    #[error("no consistent sample found within {0} retries")]
    RetryBudgetExhausted(u64),
    #[error("tree has {0} nodes, enumeration is limited to {MAX_ENUM_NODES}")]
    TreeTooLarge(usize),
    #[error("path has {0} root causes, difficulty is defined for 1 through 6")]
    RootCausesOutOfRange(usize),
}

/// Difficulty bucket of a path, determined by its number of root causes:
/// 1–2 causes are level 1, 3–4 level 2, 5–6 level 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum DifficultyLevel {
    One,
    Two,
    Three,
}

impl DifficultyLevel {
    pub const ALL: [DifficultyLevel; 3] = [
        DifficultyLevel::One,
        DifficultyLevel::Two,
        DifficultyLevel::Three,
    ];

    pub fn as_u8(self) -> u8 {
        match self {
            DifficultyLevel::One => 1,
            DifficultyLevel::Two => 2,
            DifficultyLevel::Three => 3,
        }
    }

    /// The root-cause counts that map to this level.
    pub fn cause_range(self) -> std::ops::RangeInclusive<usize> {
        match self {
            DifficultyLevel::One => 1..=2,
            DifficultyLevel::Two => 3..=4,
            DifficultyLevel::Three => 5..=6,
        }
    }
}

impl From<DifficultyLevel> for u8 {
    fn from(level: DifficultyLevel) -> u8 {
        level.as_u8()
    }
}

impl TryFrom<u8> for DifficultyLevel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(DifficultyLevel::One),
            2 => Ok(DifficultyLevel::Two),
            3 => Ok(DifficultyLevel::Three),
            other => Err(format!("difficulty level must be 1, 2 or 3, got {other}")),
        }
    }
}

impl std::fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// A selected solution leaf together with its repair text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCause {
    pub id: NodeId,
    pub solution_text: String,
}

/// A gate-consistent set of failed nodes with its traversal order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultPath {
    /// Every failed node, root included.
    pub selected: BTreeSet<NodeId>,
    /// Depth-first visit order of the selected subgraph from the root,
    /// breaking ties on document child order.
    pub order: Vec<NodeId>,
    /// Selected solution leaves, in document order.
    pub root_causes: Vec<RootCause>,
    /// The initial failures the sample started from.
    #[serde(rename = "seed")]
    pub seed_failures: Vec<NodeId>,
    /// Difficulty bucket; absent when the cause count fell outside 1..=6.
    pub level: Option<DifficultyLevel>,
}

impl FaultPath {
    pub fn root_cause_ids(&self) -> Vec<NodeId> {
        self.root_causes.iter().map(|c| c.id.clone()).collect()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.selected.contains(id)
    }

    pub fn failure_set(&self) -> FailureSet {
        FailureSet(self.selected.clone())
    }
}

/// Classify a path by its root-cause count.
pub fn classify_difficulty(path: &FaultPath) -> Result<DifficultyLevel, SampleError> {
    match path.root_causes.len() {
        1..=2 => Ok(DifficultyLevel::One),
        3..=4 => Ok(DifficultyLevel::Two),
        5..=6 => Ok(DifficultyLevel::Three),
        n => Err(SampleError::RootCausesOutOfRange(n)),
    }
}

fn derive_seed(base: u64, salt: u64) -> u64 {
    // splitmix64-style mixing keeps derived streams independent.
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample one fault path from the given solution-leaf seeds.
///
/// Deterministic: identical `(tree, s_init, rng_seed)` triples yield
/// identical paths. Fails when a seed is not a solution leaf, when the seed
/// combination provably admits no consistent superset, or when the retry
/// budget runs out.
pub fn sample_path(
    tree: &FaultTree,
    index: &GraphIndex,
    s_init: &[NodeId],
    rng_seed: u64,
) -> Result<FaultPath, SampleError> {
    if s_init.is_empty() {
        return Err(SampleError::EmptySeedSet);
    }
    for seed in s_init {
        let node = tree
            .node(seed)
            .ok_or_else(|| SampleError::UnknownSeed(seed.clone()))?;
        if !node.kind.is_solution() {
            return Err(SampleError::SeedNotSolution(seed.clone()));
        }
    }
    // Canonical processing order: document position, duplicates dropped.
    let seeds: Vec<NodeId> = tree
        .nodes()
        .filter(|n| s_init.contains(&n.id))
        .map(|n| n.id.clone())
        .collect();

    // Seeds whose every chain combination crosses an XOR through different
    // arms can never expand consistently; skip the retry loop for them.
    if seeds.len() > 1 && provably_unsatisfiable(tree, index, &seeds) {
        return Err(SampleError::UnsatisfiableSeeds);
    }

    let reach = reach_sets(tree, index);

    for attempt in 0..SAMPLE_RETRY_BUDGET {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, attempt));
        let selected = expand_from_seeds(tree, index, &seeds, &reach, &mut rng);
        let set = FailureSet(selected.iter().cloned().collect());
        if gate_semantics_check(tree, index, &set).is_empty() {
            return Ok(finish_path(tree, &seeds, set));
        }
    }
    Err(SampleError::RetryBudgetExhausted(SAMPLE_RETRY_BUDGET))
}

/// Sample a path from a randomly drawn seed set of `1..=max_seeds` solution
/// leaves. Redraws on unsatisfiable combinations, so trees with conflicting
/// XOR arms still yield paths.
pub fn sample_random_path(
    tree: &FaultTree,
    index: &GraphIndex,
    max_seeds: usize,
    rng_seed: u64,
) -> Result<FaultPath, SampleError> {
    let solutions = tree.solution_ids();
    if solutions.is_empty() {
        return Err(SampleError::EmptySeedSet);
    }
    let mut last = SampleError::RetryBudgetExhausted(SAMPLE_RETRY_BUDGET);
    for attempt in 0..SAMPLE_RETRY_BUDGET {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, 0xD4A7 ^ attempt));
        let k = rng.gen_range(1..=max_seeds.clamp(1, solutions.len()));
        let mut pool = solutions.clone();
        let picked: Vec<NodeId> = (0..k)
            .map(|_| pool.swap_remove(rng.gen_range(0..pool.len())))
            .collect();
        match sample_path(tree, index, &picked, derive_seed(rng_seed, attempt)) {
            Ok(path) => return Ok(path),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Solution leaves reachable from each node through the resolved structure.
fn reach_sets(tree: &FaultTree, index: &GraphIndex) -> HashMap<NodeId, BTreeSet<NodeId>> {
    let mut reach: HashMap<NodeId, BTreeSet<NodeId>> = HashMap::new();
    // depth_order lists parents first; fill children before their parents.
    for id in index.depth_order().iter().rev() {
        let node = tree.node(id).expect("indexed node");
        let set = if node.kind.is_solution() {
            BTreeSet::from([id.clone()])
        } else {
            let mut set = BTreeSet::new();
            for child in tree.resolved_children(id) {
                if let Some(child_reach) = reach.get(&child) {
                    set.extend(child_reach.iter().cloned());
                }
            }
            set
        };
        reach.insert(id.clone(), set);
    }
    reach
}

/// One expansion attempt: traceback every seed, then satisfy AND obligations
/// to a fixpoint. Insertion order of the returned set is deterministic.
fn expand_from_seeds(
    tree: &FaultTree,
    index: &GraphIndex,
    seeds: &[NodeId],
    reach: &HashMap<NodeId, BTreeSet<NodeId>>,
    rng: &mut ChaCha8Rng,
) -> IndexSet<NodeId> {
    let mut selected: IndexSet<NodeId> = IndexSet::new();
    for seed in seeds {
        traceback_to_root(tree, index, seed, &mut selected, rng);
    }

    // Each round selects at least one missing child, so the fixpoint is
    // reached within |nodes| rounds.
    for _ in 0..=tree.len() {
        let obligations: Vec<NodeId> = selected
            .iter()
            .filter(|id| {
                tree.node(id)
                    .map(|n| n.kind.gate_logic() == Some(GateLogic::And))
                    .unwrap_or(false)
            })
            .flat_map(|id| tree.node(id).expect("selected node").child_ids().to_vec())
            .filter(|child| !selected.contains(child))
            .collect();
        if obligations.is_empty() {
            break;
        }
        for child in obligations {
            if selected.contains(&child) {
                continue;
            }
            pick_solution_below(tree, reach, &child, &mut selected, rng);
        }
    }
    selected
}

/// Walk from `start` to the root, choosing one parent uniformly wherever the
/// DAG offers several, and stop as soon as the walk meets the selection.
fn traceback_to_root(
    tree: &FaultTree,
    index: &GraphIndex,
    start: &NodeId,
    selected: &mut IndexSet<NodeId>,
    rng: &mut ChaCha8Rng,
) {
    let mut current = start.clone();
    loop {
        if !selected.insert(current.clone()) {
            return;
        }
        if &current == tree.root_id() {
            return;
        }
        let parents = index.parents(&current);
        if parents.is_empty() {
            return;
        }
        current = parents[rng.gen_range(0..parents.len())].clone();
    }
}

/// Satisfy one missing child of an AND-like gate: pick a solution leaf below
/// it uniformly and select a random downward route to that leaf. AND gates
/// met on the route leave their remaining children to the next round.
fn pick_solution_below(
    tree: &FaultTree,
    reach: &HashMap<NodeId, BTreeSet<NodeId>>,
    child: &NodeId,
    selected: &mut IndexSet<NodeId>,
    rng: &mut ChaCha8Rng,
) {
    let below = &reach[child];
    if below.is_empty() {
        // Nothing to fail below an empty branch; validation rejects such
        // trees before sampling.
        selected.insert(child.clone());
        return;
    }
    let goal = below
        .iter()
        .nth(rng.gen_range(0..below.len()))
        .expect("non-empty reach")
        .clone();

    let mut current = child.clone();
    loop {
        selected.insert(current.clone());
        if current == goal {
            return;
        }
        let candidates: Vec<NodeId> = tree
            .resolved_children(&current)
            .into_iter()
            .filter(|c| reach[c].contains(&goal))
            .collect();
        debug_assert!(!candidates.is_empty(), "goal is reachable by construction");
        if candidates.is_empty() {
            return;
        }
        current = candidates[rng.gen_range(0..candidates.len())].clone();
    }
}

fn finish_path(tree: &FaultTree, seeds: &[NodeId], set: FailureSet) -> FaultPath {
    let order = dfs_order(tree, &set);
    let root_causes: Vec<RootCause> = tree
        .nodes()
        .filter(|n| n.kind.is_solution() && set.contains(&n.id))
        .map(|n| RootCause {
            id: n.id.clone(),
            solution_text: n.solution_text().unwrap_or_default().to_string(),
        })
        .collect();
    let mut path = FaultPath {
        selected: set.0,
        order,
        root_causes,
        seed_failures: seeds.to_vec(),
        level: None,
    };
    path.level = classify_difficulty(&path).ok();
    path
}

/// Depth-first preorder of the selected subgraph from the root, visiting
/// selected resolved children in document order, each node once.
pub fn dfs_order(tree: &FaultTree, set: &FailureSet) -> Vec<NodeId> {
    let mut order = Vec::with_capacity(set.len());
    let mut visited: BTreeSet<NodeId> = BTreeSet::new();
    let mut stack = vec![tree.root_id().clone()];
    while let Some(id) = stack.pop() {
        if !set.contains(&id) || !visited.insert(id.clone()) {
            continue;
        }
        order.push(id.clone());
        for child in tree.resolved_children(&id).into_iter().rev() {
            if set.contains(&child) && !visited.contains(&child) {
                stack.push(child);
            }
        }
    }
    order
}

/// Prove, when cheaply possible, that no gate-consistent superset of the
/// seeds exists: every combination of seed-to-root parent chains must cross
/// some XOR gate through two different children. The check is sound but not
/// complete; expansion-induced conflicts are not analyzed.
fn provably_unsatisfiable(tree: &FaultTree, index: &GraphIndex, seeds: &[NodeId]) -> bool {
    const CHAIN_CAP: usize = 64;
    const COMBO_CAP: usize = 4096;

    // Chains as lists of (xor gate, entering child) crossings.
    let mut per_seed: Vec<Vec<Vec<(NodeId, NodeId)>>> = Vec::new();
    for seed in seeds {
        let mut chains = Vec::new();
        let mut path: Vec<NodeId> = vec![seed.clone()];
        collect_chains(tree, index, seed, &mut path, &mut chains, CHAIN_CAP);
        if chains.is_empty() || chains.len() >= CHAIN_CAP {
            return false;
        }
        per_seed.push(chains);
    }

    let combos: usize = per_seed.iter().map(Vec::len).product();
    if combos == 0 || combos > COMBO_CAP {
        return false;
    }

    let mut indices = vec![0usize; per_seed.len()];
    loop {
        let mut used: HashMap<&NodeId, &NodeId> = HashMap::new();
        let mut conflict = false;
        'combo: for (seed_idx, chain_idx) in indices.iter().enumerate() {
            for (gate, child) in &per_seed[seed_idx][*chain_idx] {
                match used.get(gate) {
                    Some(existing) if *existing != child => {
                        conflict = true;
                        break 'combo;
                    }
                    _ => {
                        used.insert(gate, child);
                    }
                }
            }
        }
        if !conflict {
            return false;
        }
        // Next combination.
        let mut pos = 0;
        loop {
            if pos == indices.len() {
                return true;
            }
            indices[pos] += 1;
            if indices[pos] < per_seed[pos].len() {
                break;
            }
            indices[pos] = 0;
            pos += 1;
        }
    }
}

fn collect_chains(
    tree: &FaultTree,
    index: &GraphIndex,
    current: &NodeId,
    path: &mut Vec<NodeId>,
    chains: &mut Vec<Vec<(NodeId, NodeId)>>,
    cap: usize,
) {
    if chains.len() >= cap {
        return;
    }
    if current == tree.root_id() {
        let mut crossings = Vec::new();
        for pair in path.windows(2) {
            let (child, parent) = (&pair[0], &pair[1]);
            if let Some(node) = tree.node(parent) {
                if node.kind.gate_logic() == Some(GateLogic::Xor) {
                    crossings.push((parent.clone(), child.clone()));
                }
            }
        }
        chains.push(crossings);
        return;
    }
    for parent in index.parents(current) {
        if path.contains(parent) {
            continue;
        }
        path.push(parent.clone());
        collect_chains(tree, index, parent, path, chains, cap);
        path.pop();
    }
}

/// Enumerate every gate-consistent failure set containing the root.
///
/// Exhaustive over all node subsets, so it is limited to trees of at most
/// [`MAX_ENUM_NODES`] nodes. Intended as a test oracle.
pub fn enumerate_consistent_sets(
    tree: &FaultTree,
    index: &GraphIndex,
) -> Result<Vec<FailureSet>, SampleError> {
    let n = tree.len();
    if n > MAX_ENUM_NODES {
        return Err(SampleError::TreeTooLarge(n));
    }

    let ids: Vec<NodeId> = tree.nodes().map(|node| node.id.clone()).collect();
    let idx_of: HashMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let root = idx_of[tree.root_id()];

    struct Slot {
        logic: Option<GateLogic>,
        is_link: bool,
        children: Vec<usize>,
        /// For links: index of the final non-link target, if resolvable.
        resolve: Option<usize>,
        parents: Vec<usize>,
    }

    let slots: Vec<Slot> = ids
        .iter()
        .map(|id| {
            let node = tree.node(id).expect("listed node");
            Slot {
                logic: node.kind.gate_logic(),
                is_link: node.kind.is_link(),
                children: node
                    .child_ids()
                    .iter()
                    .filter_map(|c| idx_of.get(c).copied())
                    .collect(),
                resolve: tree.resolve_link(id).and_then(|t| idx_of.get(t).copied()),
                parents: index
                    .parents(id)
                    .iter()
                    .filter_map(|p| idx_of.get(p).copied())
                    .collect(),
            }
        })
        .collect();

    // A child counts as failed by membership, links through their target.
    let counts = |mask: u32, slot_idx: usize| -> bool {
        let slot = &slots[slot_idx];
        if slot.is_link {
            slot.resolve.map(|t| mask & (1 << t) != 0).unwrap_or(false)
        } else {
            mask & (1 << slot_idx) != 0
        }
    };

    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if mask & (1 << root) == 0 {
            continue;
        }
        let mut ok = true;
        for (i, slot) in slots.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            if let Some(logic) = slot.logic {
                let failed = slot.children.iter().filter(|&&c| counts(mask, c)).count();
                let satisfied = match logic {
                    GateLogic::And => failed == slot.children.len(),
                    GateLogic::Or => failed >= 1,
                    GateLogic::Xor => failed == 1,
                };
                if !satisfied {
                    ok = false;
                    break;
                }
            }
            if slot.is_link && !counts(mask, i) {
                ok = false;
                break;
            }
            if i != root && !slot.parents.iter().any(|&p| mask & (1 << p) != 0) {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(FailureSet(
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| ids[i].clone())
                    .collect(),
            ));
        }
    }
    Ok(out)
}
