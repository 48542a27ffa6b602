//! Exact discrete inference by full joint enumeration.
//!
//! Decision and algorithm nodes get their mechanism from a [`Bindings`] map
//! (a fixed value, a mixed prior or a policy over the observation parent).
//! A decision node with an algorithm parent and no binding executes the
//! algorithm's policy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::rational::Rational;
use crate::worldmodel::{
    topological_order, DecisionProblem, ModelError, Node, NodeId, NodeKind, Policy, PredictorMode,
    WorldGraph, POLICY_SEPARATOR,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferenceError {
    #[error("decision node `{0}` has no binding")]
    UnboundDecisionNode(NodeId),
    #[error("conditioning on a zero-probability event: {0}")]
    ZeroProbabilityEvent(String),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("value `{value}` is outside the value set of `{node}`")]
    ValueOutOfRange { node: NodeId, value: String },
    #[error("`{0}` is not an algorithm node")]
    NotAnAlgorithmNode(NodeId),
    #[error("the utility node `{0}` cannot be intervened on")]
    UtilityIntervention(NodeId),
    #[error("binding for `{0}` does not fit the node: {1}")]
    BadBinding(NodeId, String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How an otherwise unmodeled decision or algorithm node behaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Value(String),
    Mixed(Vec<(String, Rational)>),
    /// Action chosen from the node's observation parent.
    Policy(Policy),
}

/// Bindings apply to decision and algorithm nodes; entries naming other
/// nodes are ignored.
pub type Bindings = BTreeMap<NodeId, Binding>;

/// `(node, value)` constraints in disjunctive normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    clauses: Vec<Vec<(NodeId, String)>>,
}

impl Event {
    pub fn always() -> Self {
        Event { clauses: vec![Vec::new()] }
    }

    pub fn never() -> Self {
        Event { clauses: Vec::new() }
    }

    pub fn is(node: impl Into<NodeId>, value: impl Into<String>) -> Self {
        Event { clauses: vec![vec![(node.into(), value.into())]] }
    }

    pub fn and(&self, other: &Event) -> Event {
        let mut clauses = Vec::new();
        for a in &self.clauses {
            for b in &other.clauses {
                let mut c = a.clone();
                c.extend(b.iter().cloned());
                clauses.push(c);
            }
        }
        Event { clauses }
    }

    pub fn or(&self, other: &Event) -> Event {
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().cloned());
        Event { clauses }
    }

    pub fn any_of(events: impl IntoIterator<Item = Event>) -> Event {
        events.into_iter().fold(Event::never(), |acc, e| acc.or(&e))
    }

    pub fn clauses(&self) -> &[Vec<(NodeId, String)>] {
        &self.clauses
    }

    fn compile(&self, schema: &Schema) -> Result<Vec<Vec<(usize, u32)>>, InferenceError> {
        self.clauses
            .iter()
            .map(|c| c.iter().map(|(n, v)| schema.literal(n, v)).collect())
            .collect()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("false");
        }
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                if c.is_empty() {
                    "true".to_string()
                } else {
                    c.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(" & ")
                }
            })
            .collect();
        f.write_str(&parts.join(" | "))
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Schema {
    names: Vec<NodeId>,
    values: Vec<Vec<String>>,
}

impl Schema {
    fn of(graph: &WorldGraph) -> Schema {
        let (names, values) = graph
            .nodes()
            .iter()
            .filter(|n| !n.is_utility())
            .map(|n| (n.id.clone(), n.values.clone()))
            .unzip();
        Schema { names, values }
    }

    fn slot(&self, node: &str) -> Option<usize> {
        self.names.iter().position(|n| n.as_str() == node)
    }

    fn literal(&self, node: &NodeId, value: &str) -> Result<(usize, u32), InferenceError> {
        let s = self.slot(node.as_str()).ok_or_else(|| InferenceError::UnknownNode(node.clone()))?;
        let v = self.values[s]
            .iter()
            .position(|x| x == value)
            .ok_or_else(|| InferenceError::ValueOutOfRange { node: node.clone(), value: value.to_string() })?;
        Ok((s, v as u32))
    }
}

/// An exact distribution over full assignments of the non-utility nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    schema: Arc<Schema>,
    worlds: Vec<(Vec<u32>, Rational)>,
}

impl Distribution {
    pub fn node_names(&self) -> &[NodeId] {
        &self.schema.names
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn total_mass(&self) -> Rational {
        self.worlds.iter().map(|(_, m)| m).sum()
    }

    /// Worlds as `(node -> value)` maps with their masses.
    pub fn assignments(&self) -> Vec<(BTreeMap<String, String>, Rational)> {
        self.worlds
            .iter()
            .map(|(w, m)| {
                let a = w
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (self.schema.names[i].to_string(), self.schema.values[i][v as usize].clone()))
                    .collect();
                (a, m.clone())
            })
            .collect()
    }

    pub fn probability(&self, event: &Event) -> Result<Rational, InferenceError> {
        let compiled = event.compile(&self.schema)?;
        Ok(self
            .worlds
            .iter()
            .filter(|(w, _)| holds(&compiled, w))
            .map(|(_, m)| m)
            .sum())
    }

    /// Marginal of one node over its full value set, zeros included.
    pub fn marginal(&self, node: &str) -> Result<Vec<(String, Rational)>, InferenceError> {
        let s = self.schema.slot(node).ok_or_else(|| InferenceError::UnknownNode(NodeId::new(node)))?;
        let mut mass = vec![Rational::zero(); self.schema.values[s].len()];
        for (w, m) in &self.worlds {
            mass[w[s] as usize] += m;
        }
        Ok(self.schema.values[s].iter().cloned().zip(mass).collect())
    }

    pub fn marginal_of(&self, node: &str, value: &str) -> Result<Rational, InferenceError> {
        self.probability(&Event::is(node, value))
    }
}

fn holds(clauses: &[Vec<(usize, u32)>], world: &[u32]) -> bool {
    clauses.iter().any(|c| c.iter().all(|&(s, v)| world[s] == v))
}

/// A node's mechanism as dense rows over its effective parents.
struct Mechanism {
    parents: Vec<usize>,
    strides: Vec<usize>,
    rows: Vec<Vec<(u32, Rational)>>,
}

impl Mechanism {
    fn row(&self, world: &[u32]) -> &[(u32, Rational)] {
        let idx: usize = self.parents.iter().zip(&self.strides).map(|(&p, &s)| world[p] as usize * s).sum();
        &self.rows[idx]
    }
}

struct Compiled {
    schema: Arc<Schema>,
    order: Vec<usize>,
    mechs: Vec<Mechanism>,
}

fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * sizes[i + 1];
    }
    out
}

fn value_idx(node: &Node, value: &str) -> Result<u32, InferenceError> {
    node.value_index(value)
        .map(|i| i as u32)
        .ok_or_else(|| InferenceError::ValueOutOfRange { node: node.id.clone(), value: value.to_string() })
}

fn point(i: u32) -> Vec<(u32, Rational)> {
    vec![(i, Rational::one())]
}

fn dist_row(node: &Node, dist: &[(String, Rational)]) -> Result<Vec<(u32, Rational)>, InferenceError> {
    let mut row = Vec::new();
    let mut total = Rational::zero();
    for (v, p) in dist {
        if p.is_negative() {
            return Err(InferenceError::BadBinding(node.id.clone(), format!("negative weight for `{v}`")));
        }
        total += p;
        if !p.is_zero() {
            row.push((value_idx(node, v)?, p.clone()));
        }
    }
    if !total.is_one() {
        return Err(InferenceError::BadBinding(node.id.clone(), format!("weights sum to {total}")));
    }
    Ok(row)
}

fn compile(graph: &WorldGraph, bindings: &Bindings) -> Result<Compiled, InferenceError> {
    let schema = Arc::new(Schema::of(graph));
    let order = topological_order(graph)?
        .iter()
        .filter_map(|id| schema.slot(id.as_str()))
        .collect();
    let mut mechs = Vec::with_capacity(schema.names.len());
    for node in graph.nodes().iter().filter(|n| !n.is_utility()) {
        mechs.push(mechanism(graph, &schema, node, bindings)?);
    }
    Ok(Compiled { schema, order, mechs })
}

fn table_mechanism<T>(
    graph: &WorldGraph,
    schema: &Schema,
    node: &Node,
    rows: &[T],
    key: impl Fn(&T) -> &Vec<String>,
    entry: impl Fn(&T) -> Result<Vec<(u32, Rational)>, InferenceError>,
) -> Result<Mechanism, InferenceError> {
    let parents: Vec<usize> = node
        .parents
        .iter()
        .map(|p| schema.slot(p.as_str()).ok_or_else(|| InferenceError::UnknownNode(p.clone())))
        .collect::<Result<_, _>>()?;
    let by_key: HashMap<&Vec<String>, &T> = rows.iter().map(|r| (key(r), r)).collect();
    let tuples = graph.parent_tuples(node);
    let mut dense = Vec::with_capacity(tuples.len());
    for t in &tuples {
        let r = by_key.get(t).ok_or_else(|| ModelError::PartialTable { node: node.id.clone(), row: t.join(", ") })?;
        dense.push(entry(r)?);
    }
    let sizes: Vec<usize> = parents.iter().map(|&p| schema.values[p].len()).collect();
    Ok(Mechanism { strides: strides(&sizes), parents, rows: dense })
}

fn constant(rows: Vec<(u32, Rational)>) -> Mechanism {
    Mechanism { parents: Vec::new(), strides: Vec::new(), rows: vec![rows] }
}

fn mechanism(graph: &WorldGraph, schema: &Schema, node: &Node, bindings: &Bindings) -> Result<Mechanism, InferenceError> {
    match &node.kind {
        NodeKind::Chance { rows } => table_mechanism(graph, schema, node, rows, |r| &r.parents, |r| dist_row(node, &r.dist)),
        NodeKind::Deterministic { rows } => {
            table_mechanism(graph, schema, node, rows, |r| &r.parents, |r| Ok(point(value_idx(node, &r.value)?)))
        }
        NodeKind::Utility { .. } => unreachable!("utility node has no mechanism"),
        NodeKind::Algorithm { pinned: Some(v) } => Ok(constant(point(value_idx(node, v)?))),
        NodeKind::Algorithm { pinned: None } => match bindings.get(&node.id) {
            Some(Binding::Value(v)) => Ok(constant(point(value_idx(node, v)?))),
            Some(Binding::Mixed(d)) => Ok(constant(dist_row(node, d)?)),
            Some(Binding::Policy(p)) => Ok(constant(point(value_idx(node, &p.id())?))),
            None => Err(InferenceError::UnboundDecisionNode(node.id.clone())),
        },
        NodeKind::Decision { .. } => {
            let alg = node
                .parents
                .iter()
                .find(|p| matches!(graph.node(p.as_str()).map(|n| &n.kind), Some(NodeKind::Algorithm { .. })));
            let obs = node.parents.iter().find(|p| Some(*p) != alg);
            match bindings.get(&node.id) {
                Some(Binding::Value(v)) => Ok(constant(point(value_idx(node, v)?))),
                Some(Binding::Mixed(d)) => Ok(constant(dist_row(node, d)?)),
                Some(Binding::Policy(p)) => policy_mechanism(graph, schema, node, obs, p),
                None => match alg {
                    Some(a) => algorithm_reader(graph, schema, node, a, obs),
                    None => Err(InferenceError::UnboundDecisionNode(node.id.clone())),
                },
            }
        }
    }
}

fn policy_mechanism(
    graph: &WorldGraph,
    schema: &Schema,
    node: &Node,
    obs: Option<&NodeId>,
    policy: &Policy,
) -> Result<Mechanism, InferenceError> {
    let bad = |msg: String| InferenceError::BadBinding(node.id.clone(), msg);
    match obs {
        None => {
            let a = policy.sole_action().ok_or_else(|| bad("node has no observation parent".into()))?;
            Ok(constant(point(value_idx(node, a)?)))
        }
        Some(o) => {
            let on = graph.node(o.as_str()).ok_or_else(|| InferenceError::UnknownNode(o.clone()))?;
            let mut rows = Vec::with_capacity(on.values.len());
            for v in &on.values {
                let a = policy.action_for(v).ok_or_else(|| bad(format!("policy has no entry for `{v}`")))?;
                rows.push(point(value_idx(node, a)?));
            }
            let slot = schema.slot(o.as_str()).ok_or_else(|| InferenceError::UnknownNode(o.clone()))?;
            Ok(Mechanism { parents: vec![slot], strides: vec![1], rows })
        }
    }
}

fn algorithm_reader(
    graph: &WorldGraph,
    schema: &Schema,
    node: &Node,
    alg: &NodeId,
    obs: Option<&NodeId>,
) -> Result<Mechanism, InferenceError> {
    let an = graph.node(alg.as_str()).ok_or_else(|| InferenceError::UnknownNode(alg.clone()))?;
    let obs_count = match obs {
        Some(o) => graph.node(o.as_str()).map(|n| n.values.len()).unwrap_or(0),
        None => 1,
    };
    let mut parents = vec![schema.slot(alg.as_str()).expect("algorithm slot")];
    if let Some(o) = obs {
        parents.push(schema.slot(o.as_str()).ok_or_else(|| InferenceError::UnknownNode(o.clone()))?);
    }
    let mut rows = Vec::with_capacity(an.values.len() * obs_count);
    for id in &an.values {
        let actions: Vec<&str> = id.split(POLICY_SEPARATOR).collect();
        if actions.len() != obs_count {
            return Err(ModelError::BadPolicyEncoding { node: node.id.clone(), value: id.clone() }.into());
        }
        for a in actions {
            rows.push(point(value_idx(node, a)?));
        }
    }
    let sizes = [an.values.len(), if obs.is_some() { obs_count } else { 1 }];
    let strides = strides(&sizes[..parents.len()]);
    Ok(Mechanism { parents, strides, rows })
}

impl Compiled {
    /// Enumerate all completions of `fixed`, scaling masses by `mass`.
    fn extend(&self, fixed: &[Option<u32>], mass: &Rational, out: &mut Vec<(Vec<u32>, Rational)>) {
        let mut world = vec![0u32; self.schema.names.len()];
        self.walk(0, fixed, &mut world, mass.clone(), out);
    }

    fn walk(&self, depth: usize, fixed: &[Option<u32>], world: &mut Vec<u32>, mass: Rational, out: &mut Vec<(Vec<u32>, Rational)>) {
        if depth == self.order.len() {
            out.push((world.clone(), mass));
            return;
        }
        let slot = self.order[depth];
        if let Some(v) = fixed[slot] {
            world[slot] = v;
            return self.walk(depth + 1, fixed, world, mass, out);
        }
        let row = self.mechs[slot].row(world);
        match row {
            [(v, _)] => {
                world[slot] = *v;
                self.walk(depth + 1, fixed, world, mass, out);
            }
            _ => {
                for (v, p) in row.iter() {
                    world[slot] = *v;
                    self.walk(depth + 1, fixed, world, &mass * p, out);
                }
            }
        }
    }
}

/// The exact joint over all non-utility nodes.
pub fn joint_distribution(graph: &WorldGraph, bindings: &Bindings) -> Result<Distribution, InferenceError> {
    let c = compile(graph, bindings)?;
    let mut worlds = Vec::new();
    c.extend(&vec![None; c.schema.names.len()], &Rational::one(), &mut worlds);
    Ok(Distribution { schema: c.schema, worlds })
}

/// Restrict to `event` and renormalize.
pub fn condition(dist: &Distribution, event: &Event) -> Result<Distribution, InferenceError> {
    let compiled = event.compile(&dist.schema)?;
    let kept: Vec<(Vec<u32>, Rational)> = dist.worlds.iter().filter(|(w, _)| holds(&compiled, w)).cloned().collect();
    let mass: Rational = kept.iter().map(|(_, m)| m).sum();
    if mass.is_zero() {
        return Err(InferenceError::ZeroProbabilityEvent(event.to_string()));
    }
    let worlds = kept.into_iter().map(|(w, m)| (w, m / &mass)).collect();
    Ok(Distribution { schema: dist.schema.clone(), worlds })
}

/// Graph surgery: `node` loses its parents and takes `value`.
///
/// An algorithm node keeps its kind and is pinned, so decision nodes that
/// execute it still decode the pinned policy.
pub fn do_intervention(graph: &WorldGraph, node: &str, value: &str) -> Result<WorldGraph, InferenceError> {
    let n = graph.node(node).ok_or_else(|| InferenceError::UnknownNode(NodeId::new(node)))?;
    if n.is_utility() {
        return Err(InferenceError::UtilityIntervention(n.id.clone()));
    }
    value_idx(n, value)?;
    let kind = match n.kind {
        NodeKind::Algorithm { .. } => NodeKind::Algorithm { pinned: Some(value.to_string()) },
        _ => NodeKind::Deterministic {
            rows: vec![crate::worldmodel::DetRow { parents: Vec::new(), value: value.to_string() }],
        },
    };
    let replaced = Node {
        id: n.id.clone(),
        values: n.values.clone(),
        parents: Vec::new(),
        kind,
        stage: n.stage,
        predictor: PredictorMode::Direct,
    };
    Ok(graph.with_node(replaced)?)
}

/// Logical counterfactual: the algorithm outputs `policy` everywhere it is read.
pub fn algorithm_intervention(graph: &WorldGraph, algo_node: &str, policy: &Policy) -> Result<WorldGraph, InferenceError> {
    let n = graph.node(algo_node).ok_or_else(|| InferenceError::UnknownNode(NodeId::new(algo_node)))?;
    if !matches!(n.kind, NodeKind::Algorithm { .. }) {
        return Err(InferenceError::NotAnAlgorithmNode(n.id.clone()));
    }
    do_intervention(graph, algo_node, &policy.id())
}

/// Evidence-then-surgery: the posterior over the non-descendants of `node`
/// given `evidence`, with `node` set to `value` and its descendants recomputed.
pub fn intervene_after_evidence(
    graph: &WorldGraph,
    bindings: &Bindings,
    evidence: &Event,
    node: &str,
    value: &str,
) -> Result<Distribution, InferenceError> {
    let posterior = condition(&joint_distribution(graph, bindings)?, evidence)?;
    let cut = do_intervention(graph, node, value)?;
    let c = compile(&cut, bindings)?;
    let downstream = graph.descendants(node);
    let keep: Vec<bool> = c
        .schema
        .names
        .iter()
        .map(|n| n.as_str() != node && !downstream.contains(n))
        .collect();
    let mut projected: BTreeMap<Vec<Option<u32>>, Rational> = BTreeMap::new();
    for (w, m) in &posterior.worlds {
        let key = w.iter().zip(&keep).map(|(&v, &k)| k.then_some(v)).collect();
        *projected.entry(key).or_insert_with(Rational::zero) += m;
    }
    let mut worlds = Vec::new();
    for (fixed, m) in &projected {
        c.extend(fixed, m, &mut worlds);
    }
    Ok(Distribution { schema: c.schema, worlds })
}

struct UtilityTable {
    parents: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<Rational>,
}

fn utility_table(graph: &WorldGraph, schema: &Schema) -> Result<UtilityTable, InferenceError> {
    let u = graph.utility_node().ok_or(ModelError::MissingUtilityNode)?;
    let NodeKind::Utility { rows } = &u.kind else { unreachable!() };
    let parents: Vec<usize> = u
        .parents
        .iter()
        .map(|p| schema.slot(p.as_str()).ok_or_else(|| InferenceError::UnknownNode(p.clone())))
        .collect::<Result<_, _>>()?;
    let by_key: HashMap<&Vec<String>, &Rational> = rows.iter().map(|r| (&r.parents, &r.utility)).collect();
    let mut values = Vec::new();
    for t in graph.parent_tuples(u) {
        let v = by_key.get(&t).ok_or_else(|| ModelError::PartialTable { node: u.id.clone(), row: t.join(", ") })?;
        values.push((*v).clone());
    }
    let sizes: Vec<usize> = parents.iter().map(|&p| schema.values[p].len()).collect();
    Ok(UtilityTable { strides: strides(&sizes), parents, values })
}

impl UtilityTable {
    fn at(&self, world: &[u32]) -> &Rational {
        let idx: usize = self.parents.iter().zip(&self.strides).map(|(&p, &s)| world[p] as usize * s).sum();
        &self.values[idx]
    }
}

pub fn expected_utility(dist: &Distribution, graph: &WorldGraph) -> Result<Rational, InferenceError> {
    let table = utility_table(graph, &dist.schema)?;
    Ok(dist.worlds.iter().map(|(w, m)| m * table.at(w)).sum())
}

/// The utility obtained in each world, paired with the world's mass.
pub fn utility_lottery(dist: &Distribution, graph: &WorldGraph) -> Result<Vec<(Rational, Rational)>, InferenceError> {
    let table = utility_table(graph, &dist.schema)?;
    let mut out: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (w, m) in &dist.worlds {
        *out.entry(table.at(w).clone()).or_insert_with(Rational::zero) += m;
    }
    Ok(out.into_iter().rev().collect())
}

/// Give `readers` their own copy of algorithm node `alg` named `new_id`.
/// The copy is inserted right after the original.
pub fn split_algorithm_readers(
    graph: &WorldGraph,
    alg: &str,
    readers: &[NodeId],
    new_id: &NodeId,
) -> Result<WorldGraph, InferenceError> {
    let pos = graph.position(alg).ok_or_else(|| InferenceError::UnknownNode(NodeId::new(alg)))?;
    let a = &graph.nodes()[pos];
    if !matches!(a.kind, NodeKind::Algorithm { .. }) {
        return Err(InferenceError::NotAnAlgorithmNode(a.id.clone()));
    }
    let mut copy = a.clone();
    copy.id = new_id.clone();
    let mut nodes: Vec<Node> = graph.nodes().to_vec();
    for n in nodes.iter_mut() {
        if readers.contains(&n.id) {
            for p in n.parents.iter_mut() {
                if p.as_str() == alg {
                    *p = new_id.clone();
                }
            }
        }
    }
    nodes.insert(pos + 1, copy);
    Ok(WorldGraph::from_nodes(nodes))
}

fn uniform(values: &[String]) -> Vec<(String, Rational)> {
    let n = values.len() as i64;
    values.iter().map(|v| (v.clone(), Rational::new(1, n))).collect()
}

/// Every utility value with positive support when each reader of the
/// algorithm gets an independent copy and decisions range freely.
pub fn reachable_utilities(problem: &DecisionProblem) -> Result<BTreeSet<Rational>, InferenceError> {
    let mut graph = problem.graph.clone();
    let alg = graph.algorithm_nodes().next().map(|n| n.id.clone());
    if let Some(alg) = alg {
        let readers: Vec<NodeId> = graph.children(alg.as_str()).iter().map(|n| n.id.clone()).collect();
        for r in readers {
            let copy = graph.fresh_id(&format!("{alg}_{r}"));
            graph = split_algorithm_readers(&graph, alg.as_str(), &[r], &copy)?;
        }
    }
    let mut bindings = Bindings::new();
    for n in graph.nodes() {
        let free = match n.kind {
            NodeKind::Algorithm { pinned: None } => true,
            NodeKind::Decision { .. } => !n
                .parents
                .iter()
                .any(|p| matches!(graph.node(p.as_str()).map(|x| &x.kind), Some(NodeKind::Algorithm { .. }))),
            _ => false,
        };
        if free {
            bindings.insert(n.id.clone(), Binding::Mixed(uniform(&n.values)));
        }
    }
    let dist = joint_distribution(&graph, &bindings)?;
    Ok(utility_lottery(&dist, &graph)?.into_iter().map(|(u, _)| u).collect())
}

/// Uniform mixture over a node's values.
pub fn uniform_binding(node: &Node) -> Binding {
    Binding::Mixed(uniform(&node.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::worldmodel::GraphBuilder;

    fn coins() -> WorldGraph {
        GraphBuilder::new()
            .chance("X", &["h", "t"], &[], |_| vec![("h", q(1, 2)), ("t", q(1, 2))])
            .chance("Y", &["h", "t"], &[], |_| vec![("h", q(1, 2)), ("t", q(1, 2))])
            .utility("U", &["X", "Y"], |v| if v[0] == v[1] { 1.into() } else { 0.into() })
            .build()
            .unwrap()
    }

    #[test]
    fn independent_coins() {
        let d = joint_distribution(&coins(), &Bindings::new()).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.worlds.iter().all(|(_, m)| *m == q(1, 4)));
        assert_eq!(expected_utility(&d, &coins()).unwrap(), q(1, 2));
    }

    #[test]
    fn deterministic_graph_is_a_point() {
        let g = GraphBuilder::new()
            .det("X", &["a", "b"], &[], |_| "b".into())
            .det("Y", &["c", "d"], &["X"], |v| if v[0] == "a" { "c".into() } else { "d".into() })
            .utility("U", &["Y"], |_| 3.into())
            .build()
            .unwrap();
        let d = joint_distribution(&g, &Bindings::new()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.total_mass(), Rational::one());
        assert_eq!(d.marginal_of("Y", "d").unwrap(), Rational::one());
    }

    #[test]
    fn unbound_decision_is_an_error() {
        let g = GraphBuilder::new()
            .decision("A", "agent", &["C", "D"], &[])
            .utility("U", &["A"], |_| 0.into())
            .build()
            .unwrap();
        assert_eq!(
            joint_distribution(&g, &Bindings::new()),
            Err(InferenceError::UnboundDecisionNode(NodeId::new("A")))
        );
    }

    #[test]
    fn conditioning_on_everything_is_identity() {
        let d = joint_distribution(&coins(), &Bindings::new()).unwrap();
        assert_eq!(condition(&d, &Event::always()).unwrap(), d);
        assert!(matches!(condition(&d, &Event::never()), Err(InferenceError::ZeroProbabilityEvent(_))));
    }

    #[test]
    fn intervention_errors() {
        let g = coins();
        assert_eq!(do_intervention(&g, "Z", "h"), Err(InferenceError::UnknownNode(NodeId::new("Z"))));
        assert!(matches!(do_intervention(&g, "X", "edge"), Err(InferenceError::ValueOutOfRange { .. })));
        assert!(matches!(
            algorithm_intervention(&g, "X", &Policy::constant("o", "h")),
            Err(InferenceError::NotAnAlgorithmNode(_))
        ));
    }

    #[test]
    fn evidence_then_surgery_keeps_upstream_posterior() {
        // S -> R -> P, S -> U; observing R updates S, acting on P does not.
        let g = GraphBuilder::new()
            .chance("S", &["y", "n"], &[], |_| vec![("y", q(1, 4)), ("n", q(3, 4))])
            .det("R", &["r", "q"], &["S"], |v| if v[0] == "y" { "r".into() } else { "q".into() })
            .decision("P", "agent", &["a", "b"], &["R"])
            .utility("U", &["S", "P"], |v| if v[0] == "y" { 10.into() } else { 0.into() })
            .build()
            .unwrap();
        let mut b = Bindings::new();
        b.insert("P".into(), Binding::Mixed(vec![("a".into(), q(1, 2)), ("b".into(), q(1, 2))]));
        let d = intervene_after_evidence(&g, &b, &Event::is("R", "r"), "P", "b").unwrap();
        assert_eq!(d.marginal_of("S", "y").unwrap(), Rational::one());
        assert_eq!(d.marginal_of("P", "b").unwrap(), Rational::one());
    }
}
