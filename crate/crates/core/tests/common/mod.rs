//! Test support: a brute-force joint-table oracle and seeded generators.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dtlab::provability::{ModalFormula, ModalSystem};
use dtlab::worldmodel::{
    enumerate_maps, ChanceRow, DecisionProblem, DetRow, Node, NodeId, NodeKind, PredictorMode, UtilityRow, WorldGraph,
};
use dtlab::Rational;

pub type Assignment = BTreeMap<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn lookup<'a>(n: &Node, a: &'a Assignment) -> Vec<&'a str> {
    n.parents.iter().map(|p| a[p.as_str()].as_str()).collect()
}

/// Every full assignment of the non-utility nodes with its probability,
/// computed by multiplying table entries over the whole product space.
/// Decision and unpinned algorithm nodes must appear in `fixed`; `forced`
/// replaces a node's mechanism by a point mass.
pub fn brute_joint(graph: &WorldGraph, fixed: &Assignment, forced: &Assignment) -> Vec<(Assignment, Rational)> {
    let nodes: Vec<&Node> = graph.nodes().iter().filter(|n| !n.is_utility()).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; nodes.len()];
    loop {
        let a: Assignment = nodes.iter().zip(&idx).map(|(n, &i)| (n.id.to_string(), n.values[i].clone())).collect();
        let mut w = Rational::one();
        for n in &nodes {
            let v = &a[n.id.as_str()];
            let factor = if let Some(f) = forced.get(n.id.as_str()) {
                if f == v { Rational::one() } else { Rational::zero() }
            } else {
                match &n.kind {
                    NodeKind::Chance { rows } => {
                        let key = lookup(n, &a);
                        let row = rows.iter().find(|r| r.parents.iter().map(String::as_str).eq(key.iter().copied())).expect("total table");
                        row.dist.iter().find(|(x, _)| x == v).map(|(_, p)| p.clone()).unwrap_or_else(Rational::zero)
                    }
                    NodeKind::Deterministic { rows } => {
                        let key = lookup(n, &a);
                        let row = rows.iter().find(|r| r.parents.iter().map(String::as_str).eq(key.iter().copied())).expect("total table");
                        if &row.value == v { Rational::one() } else { Rational::zero() }
                    }
                    NodeKind::Algorithm { pinned: Some(p) } => {
                        if p == v { Rational::one() } else { Rational::zero() }
                    }
                    _ => {
                        let f = fixed.get(n.id.as_str()).expect("free node must be fixed");
                        if f == v { Rational::one() } else { Rational::zero() }
                    }
                }
            };
            w = w * factor;
            if w.is_zero() {
                break;
            }
        }
        if !w.is_zero() {
            out.push((a, w));
        }
        let mut k = nodes.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < nodes[k].values.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub fn brute_utility(graph: &WorldGraph, a: &Assignment) -> Rational {
    let u = graph.utility_node().expect("utility node");
    let NodeKind::Utility { rows } = &u.kind else { unreachable!() };
    let key = lookup(u, a);
    rows.iter()
        .find(|r| r.parents.iter().map(String::as_str).eq(key.iter().copied()))
        .expect("total table")
        .utility
        .clone()
}

pub fn brute_eu(joint: &[(Assignment, Rational)], graph: &WorldGraph) -> Rational {
    let total: Rational = joint.iter().map(|(_, p)| p).sum();
    let mass: Rational = joint.iter().map(|(a, p)| p * &brute_utility(graph, a)).sum();
    mass / total
}

pub fn brute_marginal(joint: &[(Assignment, Rational)], node: &str) -> BTreeMap<String, Rational> {
    let mut m = BTreeMap::new();
    for (a, p) in joint {
        *m.entry(a[node].clone()).or_insert_with(Rational::zero) += p;
    }
    m
}

fn random_dist(r: &mut ChaCha8Rng, values: &[String]) -> Vec<(String, Rational)> {
    loop {
        let w: Vec<i64> = values.iter().map(|_| r.gen_range(0..=4)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return values.iter().zip(w).map(|(v, x)| (v.clone(), Rational::new(x, total))).collect();
        }
    }
}

fn tuples(graph_nodes: &[Node], parents: &[NodeId]) -> Vec<Vec<String>> {
    let sets: Vec<&[String]> = parents
        .iter()
        .map(|p| graph_nodes.iter().find(|n| &n.id == p).expect("earlier node").values.as_slice())
        .collect();
    dtlab::worldmodel::product(&sets)
}

fn values(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

fn pick_parents(r: &mut ChaCha8Rng, pool: &[NodeId], max: usize) -> Vec<NodeId> {
    let mut p: Vec<NodeId> = pool.to_vec();
    p.shuffle(r);
    p.truncate(r.gen_range(0..=max.min(pool.len())));
    p
}

/// Chance and deterministic nodes `N0..` with at most two earlier parents
/// each, in insertion order.
fn random_world_nodes(r: &mut ChaCha8Rng, count: usize) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    for i in 0..count {
        let vals = values(&format!("n{i}_"), r.gen_range(2..=3));
        let pool: Vec<NodeId> = nodes.iter().map(|n| n.id.clone()).collect();
        let parents = pick_parents(r, &pool, 2);
        let ts = tuples(&nodes, &parents);
        let kind = if r.gen_bool(0.3) {
            NodeKind::Deterministic {
                rows: ts.into_iter().map(|t| DetRow { parents: t, value: vals.choose(r).unwrap().clone() }).collect(),
            }
        } else {
            NodeKind::Chance { rows: ts.into_iter().map(|t| ChanceRow { parents: t, dist: random_dist(r, &vals) }).collect() }
        };
        nodes.push(Node { id: NodeId::new(format!("N{i}")), values: vals, parents, kind, stage: None, predictor: PredictorMode::Direct });
    }
    nodes
}

fn utility_node(r: &mut ChaCha8Rng, nodes: &[Node], must: Option<&NodeId>) -> Node {
    let pool: Vec<NodeId> = nodes.iter().map(|n| n.id.clone()).filter(|id| Some(id) != must).collect();
    let mut parents = pick_parents(r, &pool, 2);
    if let Some(m) = must {
        parents.insert(0, m.clone());
    } else if parents.is_empty() {
        parents.push(pool[0].clone());
    }
    let rows = tuples(nodes, &parents)
        .into_iter()
        .map(|t| UtilityRow { parents: t, utility: Rational::new(r.gen_range(-6..=6), r.gen_range(1..=3)) })
        .collect();
    Node { id: NodeId::new("U"), values: Vec::new(), parents, kind: NodeKind::Utility { rows }, stage: None, predictor: PredictorMode::Direct }
}

/// A valid graph of 1 to 4 chance/det nodes plus a utility node.
pub fn random_graph(seed: u64) -> WorldGraph {
    let mut r = rng(seed);
    let count = r.gen_range(1..=4);
    let mut nodes = random_world_nodes(&mut r, count);
    let u = utility_node(&mut r, &nodes, None);
    nodes.push(u);
    WorldGraph::new(nodes).expect("generated graph is valid")
}

/// A valid problem: random world nodes, a decision node that may read an
/// observation and an algorithm node, and a utility over the decision.
pub fn random_problem(seed: u64) -> DecisionProblem {
    let mut r = rng(seed);
    let count = r.gen_range(1..=3);
    let mut nodes = random_world_nodes(&mut r, count);
    let actions = values("a", r.gen_range(1..=3));
    let obs_node = if r.gen_bool(0.5) { Some(nodes.choose(&mut r).unwrap().clone()) } else { None };
    let observations = obs_node.as_ref().map(|n| n.values.clone()).unwrap_or_else(|| vec!["start".into()]);
    let mut parents: Vec<NodeId> = obs_node.iter().map(|n| n.id.clone()).collect();
    if r.gen_bool(0.4) {
        let ids: Vec<String> = enumerate_maps(&observations, &actions, 1000).unwrap().iter().map(|p| p.id()).collect();
        nodes.insert(0, Node { id: NodeId::new("Alg"), values: ids, parents: Vec::new(), kind: NodeKind::Algorithm { pinned: None }, stage: None, predictor: PredictorMode::Direct });
        parents.insert(0, NodeId::new("Alg"));
    }
    let d = Node {
        id: NodeId::new("D"),
        values: actions.clone(),
        parents,
        kind: NodeKind::Decision { owner: if r.gen_bool(0.8) { "agent".into() } else { "other".into() } },
        stage: r.gen_bool(0.3).then(|| r.gen_range(0..3)),
        predictor: PredictorMode::Direct,
    };
    nodes.push(d.clone());
    let u = utility_node(&mut r, &nodes, Some(&d.id));
    let NodeKind::Utility { rows } = &u.kind else { unreachable!() };
    let mut outcomes: Vec<Rational> = rows.iter().map(|x| x.utility.clone()).collect();
    outcomes.sort_by(|a, b| b.cmp(a));
    outcomes.dedup();
    nodes.push(u);
    let prior = if r.gen_bool(0.5) { random_dist(&mut r, &actions) } else { Vec::new() };
    let graph = WorldGraph::new(nodes).expect("generated graph is valid");
    let p = DecisionProblem::new(format!("gen-{seed}"), graph, actions, observations, "D", outcomes, r.gen_range(0..3), r.gen_bool(0.5), prior)
        .expect("generated problem is valid");
    if r.gen_bool(0.5) {
        p.with_note(format!("seed {seed} with \"quotes\" and a \\ backslash"))
    } else {
        p
    }
}

/// Letterless formula of `□`-depth at most `depth`.
pub fn random_letterless(r: &mut ChaCha8Rng, depth: usize, size: usize) -> ModalFormula {
    random_formula(r, depth, size, &[])
}

pub fn random_formula(r: &mut ChaCha8Rng, depth: usize, size: usize, atoms: &[&str]) -> ModalFormula {
    if size <= 1 {
        let leaves = 2 + atoms.len();
        return match r.gen_range(0..leaves) {
            0 => ModalFormula::Bot,
            1 => ModalFormula::Top,
            k => ModalFormula::atom(atoms[k - 2]),
        };
    }
    let choice = r.gen_range(0..if depth > 0 { 5 } else { 4 });
    let half = (size - 1) / 2;
    match choice {
        0 => ModalFormula::not(random_formula(r, depth, size - 1, atoms)),
        1 => ModalFormula::and(random_formula(r, depth, half.max(1), atoms), random_formula(r, depth, (size - 1 - half).max(1), atoms)),
        2 => ModalFormula::or(random_formula(r, depth, half.max(1), atoms), random_formula(r, depth, (size - 1 - half).max(1), atoms)),
        3 => ModalFormula::implies(random_formula(r, depth, half.max(1), atoms), random_formula(r, depth, (size - 1 - half).max(1), atoms)),
        _ => ModalFormula::boxed(random_formula(r, depth - 1, size - 1, atoms)),
    }
}

/// A modalized system over atoms `p0..`: every self or mutual reference
/// sits under a box.
pub fn random_system(r: &mut ChaCha8Rng, count: usize) -> ModalSystem {
    let names: Vec<String> = (0..count).map(|i| format!("p{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut sys = ModalSystem::new();
    for (i, name) in names.iter().enumerate() {
        // unboxed mentions only of strictly later atoms keeps every cycle guarded
        let later: Vec<&str> = refs[i + 1..].to_vec();
        let boxed_size = r.gen_range(1..=4);
        let boxed = ModalFormula::boxed(random_formula(r, 1, boxed_size, &refs));
        let plain_size = r.gen_range(1..=3);
        let plain = random_formula(r, 0, plain_size, &later);
        let f = match r.gen_range(0..3) {
            0 => boxed,
            1 => ModalFormula::not(boxed),
            _ => ModalFormula::or(boxed, plain),
        };
        sys.define(name.clone(), f);
    }
    sys
}

/// Every problem in the generated corpus used by the round-trip criteria.
pub fn problem_corpus(n: u64) -> Vec<DecisionProblem> {
    (0..n).map(|s| random_problem(0xD5_0000 + s)).collect()
}
