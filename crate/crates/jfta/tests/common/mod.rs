//! Shared corpus for the integration suites: hand-built synthetic trees
//! covering every node kind, defect mutators for the validator, and a seeded
//! random tree generator for property tests.

#![allow(dead_code)]

use jfta::model::{
    gate, link, raw, solution, FaultTree, NodeId, NodeKind, NodeSpec, SpecPayload,
};

pub fn light_tree() -> FaultTree {
    jfta::model::parse_fault_tree(jfta::demo::LIGHT_TREE).unwrap()
}

/// Hand-built corpus specs. Every tree is valid, at most 20 nodes, and the
/// set jointly covers XOR/OR/AND/Fault/Solution/LINK in combination.
pub fn corpus_specs() -> Vec<(String, NodeSpec)> {
    vec![
        (
            "chain".into(),
            gate(
                "R",
                "pump stalls",
                NodeKind::Fault,
                vec![gate(
                    "M",
                    "drive subsystem degraded",
                    NodeKind::Or,
                    vec![
                        solution("s1", "belt worn", "tension the belt"),
                        solution("s2", "coupling loose", "tighten the coupling"),
                    ],
                )],
            ),
        ),
        (
            "xor_pair".into(),
            gate(
                "R",
                "valve stuck",
                NodeKind::Xor,
                vec![
                    solution("a", "stuck open", "close it manually"),
                    solution("b", "stuck shut", "free the stem"),
                ],
            ),
        ),
        (
            "and_pair".into(),
            gate(
                "R",
                "conveyor halts",
                NodeKind::Or,
                vec![
                    gate(
                        "A",
                        "both guards tripped",
                        NodeKind::And,
                        vec![
                            solution("X", "front guard open", "latch the front guard"),
                            solution("Y", "rear guard open", "latch the rear guard"),
                        ],
                    ),
                    solution("Z", "belt snapped", "fit a new belt"),
                ],
            ),
        ),
        (
            "diamond".into(),
            gate(
                "R",
                "alarm sounds",
                NodeKind::Or,
                vec![
                    gate(
                        "G1",
                        "sensor branch misreads",
                        NodeKind::Or,
                        vec![solution("S1", "sensor drifted", "recalibrate the sensor")],
                    ),
                    gate(
                        "G2",
                        "controller branch misreads",
                        NodeKind::Or,
                        vec![
                            link("L", "sensor branch echo", "S1"),
                            solution("S2", "threshold set wrong", "restore the threshold"),
                        ],
                    ),
                ],
            ),
        ),
        (
            "xor_nested".into(),
            gate(
                "R",
                "line output wrong",
                NodeKind::Xor,
                vec![
                    gate(
                        "A",
                        "mixer side off-spec",
                        NodeKind::Or,
                        vec![
                            solution("s1", "paddle bent", "swap the paddle"),
                            solution("s2", "feed rate high", "trim the feed rate"),
                        ],
                    ),
                    gate(
                        "B",
                        "oven side off-spec",
                        NodeKind::And,
                        vec![
                            solution("s3", "burner dirty", "clean the burner"),
                            solution("s4", "damper closed", "open the damper"),
                        ],
                    ),
                ],
            ),
        ),
        (
            "link_to_solution".into(),
            gate(
                "R",
                "panel dark",
                NodeKind::Or,
                vec![
                    gate(
                        "G",
                        "supply rail down",
                        NodeKind::Or,
                        vec![
                            solution("s1", "fuse blown", "fit a new fuse"),
                            solution("s2", "rail shorted", "clear the short"),
                        ],
                    ),
                    link("L", "supply rail echo", "s1"),
                    solution("s3", "lamp dead", "swap the lamp"),
                ],
            ),
        ),
        (
            "deep".into(),
            gate(
                "R",
                "press cycle fails",
                NodeKind::Or,
                vec![gate(
                    "A",
                    "hydraulic stage weak",
                    NodeKind::Fault,
                    vec![gate(
                        "B",
                        "pressure path diverges",
                        NodeKind::Xor,
                        vec![
                            gate(
                                "C",
                                "pump pair worn",
                                NodeKind::And,
                                vec![
                                    solution("s1", "primary pump worn", "overhaul the primary pump"),
                                    solution("s2", "backup pump worn", "overhaul the backup pump"),
                                ],
                            ),
                            gate(
                                "D",
                                "valve block leaks",
                                NodeKind::Or,
                                vec![
                                    solution("s3", "seal aged", "renew the seal"),
                                    solution("s4", "port scored", "hone the port"),
                                ],
                            ),
                        ],
                    )],
                )],
            ),
        ),
        (
            "wide_or".into(),
            gate(
                "R",
                "network flaps",
                NodeKind::Or,
                (1..=8)
                    .map(|i| {
                        solution(
                            format!("w{i}"),
                            format!("uplink {i} degraded"),
                            format!("reseat uplink {i}"),
                        )
                    })
                    .collect(),
            ),
        ),
        (
            "mixed".into(),
            gate(
                "R",
                "batch rejected",
                NodeKind::And,
                vec![
                    gate(
                        "A",
                        "dosing off",
                        NodeKind::Or,
                        vec![
                            solution("s1", "nozzle clogged", "flush the nozzle"),
                            solution("s2", "scale drifted", "re-zero the scale"),
                            solution("s3", "valve lags", "service the dosing valve"),
                        ],
                    ),
                    gate(
                        "B",
                        "curing off",
                        NodeKind::Xor,
                        vec![
                            solution("s4", "oven cold", "raise the oven setpoint"),
                            solution("s5", "timer short", "extend the cure timer"),
                        ],
                    ),
                    solution("s6", "labeler skews", "align the labeler"),
                ],
            ),
        ),
        (
            "alias_heavy".into(),
            gate(
                "R",
                "crane drifts",
                NodeKind::Or,
                vec![
                    gate(
                        "G",
                        "brake and feedback both off",
                        NodeKind::And,
                        vec![
                            solution("s1", "brake pad thin", "renew the brake pad"),
                            link("L1", "feedback branch echo", "H"),
                        ],
                    ),
                    gate(
                        "H",
                        "feedback chain noisy",
                        NodeKind::Or,
                        vec![
                            solution("s2", "encoder dusty", "blow out the encoder"),
                            solution("s3", "cable chafed", "sleeve the cable"),
                        ],
                    ),
                    link("L2", "brake pad echo", "s1"),
                ],
            ),
        ),
        (
            "two_xor".into(),
            gate(
                "R",
                "dual feed asymmetric",
                NodeKind::And,
                vec![
                    gate(
                        "X1",
                        "left feed wrong",
                        NodeKind::Xor,
                        vec![
                            solution("a", "left screw worn", "replace the left screw"),
                            solution("b", "left gate sticky", "lubricate the left gate"),
                        ],
                    ),
                    gate(
                        "X2",
                        "right feed wrong",
                        NodeKind::Xor,
                        vec![
                            solution("c", "right screw worn", "replace the right screw"),
                            solution("d", "right gate sticky", "lubricate the right gate"),
                        ],
                    ),
                ],
            ),
        ),
        (
            "grid".into(),
            gate(
                "R",
                "cell bank underperforms",
                NodeKind::Or,
                vec![
                    gate(
                        "A",
                        "string A degraded",
                        NodeKind::And,
                        vec![
                            solution("a1", "cell A1 weak", "swap cell A1"),
                            solution("a2", "cell A2 weak", "swap cell A2"),
                        ],
                    ),
                    gate(
                        "B",
                        "string B degraded",
                        NodeKind::And,
                        vec![
                            solution("b1", "cell B1 weak", "swap cell B1"),
                            solution("b2", "cell B2 weak", "swap cell B2"),
                        ],
                    ),
                    gate(
                        "C",
                        "balancer confused",
                        NodeKind::Or,
                        vec![
                            solution("c1", "shunt stuck", "free the shunt"),
                            solution("c2", "firmware stale", "reflash the balancer"),
                        ],
                    ),
                ],
            ),
        ),
        (
            "depot".into(),
            gate(
                "R",
                "depot line down",
                NodeKind::Or,
                vec![
                    gate(
                        "P",
                        "picker pair jammed",
                        NodeKind::And,
                        vec![
                            solution("p1", "picker arm bent", "straighten the picker arm"),
                            solution("p2", "picker rail gritty", "clean the picker rail"),
                        ],
                    ),
                    gate(
                        "Q",
                        "sorter pair jammed",
                        NodeKind::And,
                        vec![
                            solution("q1", "sorter flap stuck", "free the sorter flap"),
                            solution("q2", "sorter belt frayed", "renew the sorter belt"),
                        ],
                    ),
                    solution("u1", "scanner lens dirty", "wipe the scanner lens"),
                    solution("u2", "label stock out", "load label stock"),
                    gate(
                        "V",
                        "dock door misaligned",
                        NodeKind::Or,
                        vec![
                            solution("v1", "door sensor skewed", "square the door sensor"),
                            solution("v2", "door track worn", "shim the door track"),
                        ],
                    ),
                ],
            ),
        ),
        (
            "fanout".into(),
            gate(
                "R",
                "plant output low",
                NodeKind::Fault,
                vec![gate(
                    "M",
                    "any train limits throughput",
                    NodeKind::Or,
                    vec![
                        solution("f1", "train 1 fouled", "backwash train 1"),
                        solution("f2", "train 2 fouled", "backwash train 2"),
                        solution("f3", "train 3 fouled", "backwash train 3"),
                        solution("f4", "train 4 fouled", "backwash train 4"),
                        solution("f5", "train 5 fouled", "backwash train 5"),
                        solution("f6", "train 6 fouled", "backwash train 6"),
                        gate(
                            "T",
                            "shared header restricted",
                            NodeKind::And,
                            vec![
                                solution("t1", "header valve part-closed", "open the header valve"),
                                solution("t2", "strainer blinded", "rod out the strainer"),
                            ],
                        ),
                    ],
                )],
            ),
        ),
    ]
}

/// The corpus as built trees, demo tree included.
pub fn corpus() -> Vec<(String, FaultTree)> {
    let mut trees: Vec<(String, FaultTree)> = corpus_specs()
        .into_iter()
        .map(|(id, spec)| (id, FaultTree::build(spec)))
        .collect();
    trees.push(("light".into(), light_tree()));
    trees
}

/// One injected defect and the violation class it must trigger.
pub struct Mutant {
    pub label: String,
    pub tree: FaultTree,
    pub expected: jfta::model::ViolationCode,
}

/// Defect mutators applied to every corpus spec: a LINK cycle back to the
/// root, a dangling LINK, a SOLUTION with children, a duplicated id, and an
/// empty gate.
pub fn mutants() -> Vec<Mutant> {
    use jfta::model::ViolationCode as Code;
    let mut out = Vec::new();
    for (id, spec) in corpus_specs() {
        let root_id = spec.id.clone();
        out.push(Mutant {
            label: format!("{id}+cycle"),
            tree: FaultTree::build(add_child(
                spec.clone(),
                link("mut_cycle", "echo of the root", root_id),
            )),
            expected: Code::Cycle,
        });
        out.push(Mutant {
            label: format!("{id}+dangling"),
            tree: FaultTree::build(add_child(
                spec.clone(),
                link("mut_dangle", "echo of nothing", "no-such-node"),
            )),
            expected: Code::DanglingLink,
        });
        out.push(Mutant {
            label: format!("{id}+nonleaf_solution"),
            tree: FaultTree::build(add_child(
                spec.clone(),
                raw(
                    "mut_sol",
                    "remedy with a dangling branch",
                    NodeKind::Solution,
                    SpecPayload::Children(vec![solution("mut_sol_c", "stray leaf", "noop")]),
                ),
            )),
            expected: Code::SolutionNotLeaf,
        });
        out.push(Mutant {
            label: format!("{id}+duplicate"),
            tree: FaultTree::build(add_child(
                spec.clone(),
                solution(first_solution_id(&spec).expect("corpus trees have solutions"), "twin leaf", "noop"),
            )),
            expected: Code::DuplicateId,
        });
        out.push(Mutant {
            label: format!("{id}+empty_gate"),
            tree: FaultTree::build(add_child(
                spec,
                gate("mut_empty", "gate with nothing below", NodeKind::Or, vec![]),
            )),
            expected: Code::EmptyGate,
        });
    }
    out
}

/// Append one child to the first gate found on a depth-first walk.
fn add_child(mut spec: NodeSpec, extra: NodeSpec) -> NodeSpec {
    if let SpecPayload::Children(children) = &mut spec.payload {
        children.push(extra);
        spec
    } else {
        panic!("corpus roots are gates");
    }
}

fn first_solution_id(spec: &NodeSpec) -> Option<NodeId> {
    match &spec.payload {
        SpecPayload::Solution(_) => Some(spec.id.clone()),
        SpecPayload::Children(children) => children.iter().find_map(first_solution_id),
        SpecPayload::Link(_) => None,
    }
}

/// Deterministic random tree generator for property tests. Produces valid
/// trees: gates bottom out at solutions, links target non-ancestor nodes.
pub struct TreeGen {
    state: u64,
    next_id: u32,
}

impl TreeGen {
    pub fn new(seed: u64) -> Self {
        TreeGen {
            state: seed | 1,
            next_id: 0,
        }
    }

    fn next(&mut self) -> u64 {
        // xorshift64*, plenty for test-shape decisions
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    fn pick(&mut self, bound: u64) -> u64 {
        self.next() % bound.max(1)
    }

    fn fresh_id(&mut self) -> String {
        self.next_id += 1;
        format!("n{}", self.next_id)
    }

    /// A valid random tree with roughly `target` nodes (never more than 20).
    pub fn tree(&mut self, target: usize) -> FaultTree {
        self.tree_with_links(target, 0)
    }

    /// As [`TreeGen::tree`], with up to `links` LINK nodes woven in.
    pub fn tree_with_links(&mut self, target: usize, links: usize) -> FaultTree {
        // Structural overshoot is at most one leaf per open gate (3) plus
        // the links, so this cap keeps every tree within 20 nodes.
        let budget = target.clamp(3, 14);
        let mut remaining = budget as i64;
        let mut spec = self.gen_gate(2, &mut remaining, &mut Vec::new());
        if links > 0 {
            spec = self.with_links(spec, links.min(3));
        }
        let tree = FaultTree::build(spec);
        assert!(tree.len() <= 20, "generator overgrew: {} nodes", tree.len());
        tree
    }

    fn gen_gate(&mut self, depth: usize, remaining: &mut i64, path: &mut Vec<String>) -> NodeSpec {
        let id = self.fresh_id();
        *remaining -= 1;
        let kind = match self.pick(4) {
            0 => NodeKind::Xor,
            1 => NodeKind::And,
            2 => NodeKind::Fault,
            _ => NodeKind::Or,
        };
        let fanout = if matches!(kind, NodeKind::Fault) {
            1
        } else {
            1 + self.pick(3) as usize
        };
        path.push(id.clone());
        let mut children = Vec::new();
        for slot in 0..fanout {
            // Gates need at least one child; beyond that respect the budget.
            if slot > 0 && *remaining <= 0 {
                break;
            }
            if *remaining <= 2 || depth == 0 || self.pick(3) == 0 {
                let leaf = self.fresh_id();
                *remaining -= 1;
                children.push(solution(
                    leaf.clone(),
                    format!("component {leaf} is worn"),
                    format!("service component {leaf}"),
                ));
            } else {
                children.push(self.gen_gate(depth - 1, remaining, path));
            }
        }
        path.pop();
        let name = format!("stage {id} misbehaves");
        gate(id, name, kind, children)
    }

    /// Add up to `count` links under random gates. A candidate target is
    /// only accepted when the hosting gate is unreachable from it through
    /// the structure built so far, links included, so the result stays a DAG.
    pub fn with_links(&mut self, spec: NodeSpec, count: usize) -> NodeSpec {
        let mut spec = spec;
        for _ in 0..count {
            let built = FaultTree::build(spec.clone());
            let targets = all_ids_with_ancestors(&spec);
            let gates: Vec<Vec<String>> = targets
                .iter()
                .filter(|(_, is_gate, _)| *is_gate)
                .map(|(chain, _, _)| chain.clone())
                .collect();
            if gates.is_empty() {
                break;
            }
            let gate_chain = gates[self.pick(gates.len() as u64) as usize].clone();
            let host = gate_chain.last().expect("chain includes the gate").clone();
            let candidates: Vec<String> = targets
                .iter()
                .map(|(_, _, id)| id.clone())
                .filter(|id| *id != host && !reaches(&built, id, &host))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let target = candidates[self.pick(candidates.len() as u64) as usize].clone();
            let link_id = self.fresh_id();
            spec = insert_link_under(
                spec,
                &gate_chain,
                link(link_id.clone(), format!("echo {link_id}"), target),
            );
        }
        spec
    }
}

/// Can `from` reach `to` through resolved edges of the built structure?
fn reaches(tree: &FaultTree, from: &str, to: &str) -> bool {
    let mut stack = vec![NodeId::new(from)];
    let mut seen = std::collections::BTreeSet::new();
    while let Some(id) = stack.pop() {
        if !seen.insert(id.clone()) {
            continue;
        }
        if id.as_str() == to {
            return true;
        }
        stack.extend(tree.resolved_children(&id));
    }
    false
}

/// (ancestor chain including self, is_gate, id) for every node.
fn all_ids_with_ancestors(spec: &NodeSpec) -> Vec<(Vec<String>, bool, String)> {
    fn walk(spec: &NodeSpec, chain: &mut Vec<String>, out: &mut Vec<(Vec<String>, bool, String)>) {
        chain.push(spec.id.to_string());
        let is_gate = matches!(spec.payload, SpecPayload::Children(_));
        out.push((chain.clone(), is_gate, spec.id.to_string()));
        if let SpecPayload::Children(children) = &spec.payload {
            for child in children {
                walk(child, chain, out);
            }
        }
        chain.pop();
    }
    let mut out = Vec::new();
    walk(spec, &mut Vec::new(), &mut out);
    out
}

fn insert_link_under(mut spec: NodeSpec, gate_chain: &[String], link_spec: NodeSpec) -> NodeSpec {
    fn descend(spec: &mut NodeSpec, chain: &[String], link_spec: &NodeSpec) -> bool {
        if chain.first().map(String::as_str) != Some(spec.id.as_str()) {
            return false;
        }
        if chain.len() == 1 {
            if let SpecPayload::Children(children) = &mut spec.payload {
                children.push(link_spec.clone());
                return true;
            }
            return false;
        }
        if let SpecPayload::Children(children) = &mut spec.payload {
            for child in children {
                if descend(child, &chain[1..], link_spec) {
                    return true;
                }
            }
        }
        false
    }
    descend(&mut spec, gate_chain, &link_spec);
    spec
}
