//! Finite graph-structured world models and the decision problems built on them.
//!
//! A [`WorldGraph`] is a DAG of chance, decision, algorithm, deterministic and
//! utility nodes. Every table is explicit and total over the product of its
//! parents' value sets; probabilities and utilities are exact [`Rational`]s.
//!
//! Decision nodes with an algorithm parent execute that algorithm's policy on
//! their observation parent. Algorithm values are policy identifiers: the
//! policy's actions joined by `.` in observation order (a single-observation
//! policy is just the action name).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::rational::Rational;

/// Default cap on the number of policies a problem may enumerate.
pub const DEFAULT_POLICY_CAP: usize = 1_000_000;

/// Separator between per-observation actions inside a policy identifier.
pub const POLICY_SEPARATOR: char = '.';

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        NodeId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChanceRow {
    pub parents: Vec<String>,
    pub dist: Vec<(String, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetRow {
    pub parents: Vec<String>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilityRow {
    pub parents: Vec<String>,
    pub utility: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Chance { rows: Vec<ChanceRow> },
    /// The agent's physical action. Its mechanism comes from an algorithm
    /// parent when one exists, otherwise from an external binding.
    Decision { owner: String },
    /// Policy-valued root standing for the output of a decision algorithm.
    /// `pinned` fixes its output, as left behind by an intervention.
    Algorithm { pinned: Option<String> },
    Deterministic { rows: Vec<DetRow> },
    Utility { rows: Vec<UtilityRow> },
}

impl NodeKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            NodeKind::Chance { .. } => "chance",
            NodeKind::Decision { .. } => "decision",
            NodeKind::Algorithm { .. } => "algorithm",
            NodeKind::Deterministic { .. } => "det",
            NodeKind::Utility { .. } => "utility",
        }
    }
}

/// How a node that reads the algorithm node learns its output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PredictorMode {
    /// Reads the algorithm's output directly (a perfect predictor or a copy).
    #[default]
    Direct,
    /// Predicts the first policy whose selection is provable, else `fallback`.
    /// Only meaningful to the proof-based compiler.
    Proof { fallback: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    /// Ordered value set. Empty for the utility node.
    pub values: Vec<String>,
    pub parents: Vec<NodeId>,
    pub kind: NodeKind,
    /// Time index of the event this node models, if any.
    pub stage: Option<i64>,
    pub predictor: PredictorMode,
}

impl Node {
    pub fn is_utility(&self) -> bool {
        matches!(self.kind, NodeKind::Utility { .. })
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Rejection reasons for graphs and problems. Each carries the offending node
/// where one exists.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node name must be nonempty")]
    EmptyNodeId,
    #[error("duplicate node `{0}`")]
    DuplicateNode(NodeId),
    #[error("node `{node}` lists unknown parent `{parent}`")]
    UnknownParent { node: NodeId, parent: NodeId },
    #[error("node `{node}` lists parent `{parent}` twice")]
    DuplicateParent { node: NodeId, parent: NodeId },
    #[error("cycle detected through node `{0}`")]
    CycleDetected(NodeId),
    #[error("graph has no utility node")]
    MissingUtilityNode,
    #[error("graph has more than one utility node (`{0}`)")]
    MultipleUtilityNodes(NodeId),
    #[error("graph has more than one algorithm node (`{0}`)")]
    MultipleAlgorithmNodes(NodeId),
    #[error("node `{0}` has an empty or duplicated value set")]
    BadValueSet(NodeId),
    #[error("utility node `{0}` cannot have values or children")]
    BadUtilityNode(NodeId),
    #[error("algorithm node `{0}` cannot have parents")]
    AlgorithmWithParents(NodeId),
    #[error("chance node `{node}` row ({row}) does not sum to 1")]
    NonNormalizedCpt { node: NodeId, row: String },
    #[error("table of node `{node}` is not total: missing row ({row})")]
    PartialTable { node: NodeId, row: String },
    #[error("table of node `{node}` has a duplicate or malformed row ({row})")]
    BadRow { node: NodeId, row: String },
    #[error("node `{node}`: value `{value}` is outside its value set")]
    ValueOutOfRange { node: NodeId, value: String },
    #[error("decision node `{0}` must have at most one algorithm parent and one observation parent")]
    BadDecisionParents(NodeId),
    #[error("algorithm value `{value}` does not decode to a policy for decision node `{node}`")]
    BadPolicyEncoding { node: NodeId, value: String },
    #[error("proof-based predictor `{0}` must read the algorithm node and name a valid fallback")]
    BadPredictor(NodeId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("decision node `{0}` must have kind decision or algorithm")]
    NotADecisionNode(NodeId),
    #[error("actions must equal the value set of decision node `{0}`")]
    ActionMismatch(NodeId),
    #[error("observations must equal the value set of observation node `{0}`")]
    ObservationMismatch(NodeId),
    #[error("a decision node without an observation parent needs exactly one observation")]
    SingleObservationRequired,
    #[error("algorithm node `{0}` must be read by the decision node and list every policy in order")]
    AlgorithmMismatch(NodeId),
    #[error("outcome list must be strictly descending")]
    OutcomesNotSorted,
    #[error("reachable utility {0} is missing from the outcome list")]
    MissingOutcome(Rational),
    #[error("agent prior is invalid: {0}")]
    BadPrior(String),
    #[error("policy count {count} exceeds the cap of {cap}")]
    SizeLimitExceeded { count: String, cap: usize },
    #[error("policy does not match the problem's observations and actions")]
    PolicyMismatch,
    #[error("inference failed while validating the problem: {0}")]
    Inference(String),
}

/// A finite DAG of typed nodes with explicit tables.
#[derive(Debug, Clone)]
pub struct WorldGraph {
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
}

impl PartialEq for WorldGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl Eq for WorldGraph {}

impl WorldGraph {
    /// Assemble a graph without checking any invariant.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            index.entry(n.id.clone()).or_insert(i);
        }
        WorldGraph { nodes, index }
    }

    /// Assemble and validate.
    pub fn new(nodes: Vec<Node>) -> Result<Self, ModelError> {
        let g = WorldGraph::from_nodes(nodes);
        validate_graph(&g)?;
        Ok(g)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn utility_node(&self) -> Option<&Node> {
        self.nodes.iter().find(|n| n.is_utility())
    }

    pub fn algorithm_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Algorithm { .. }))
    }

    pub fn children(&self, id: &str) -> Vec<&Node> {
        self.nodes
            .iter()
            .filter(|n| n.parents.iter().any(|p| p.as_str() == id))
            .collect()
    }

    /// All strict descendants of `id`.
    pub fn descendants(&self, id: &str) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id.to_string()];
        while let Some(cur) = stack.pop() {
            for c in self.children(&cur) {
                if out.insert(c.id.clone()) {
                    stack.push(c.id.to_string());
                }
            }
        }
        out
    }

    /// Replace a node in place, keeping its position.
    pub fn with_node(&self, node: Node) -> Result<WorldGraph, ModelError> {
        let pos = self
            .position(node.id.as_str())
            .ok_or_else(|| ModelError::UnknownNode(node.id.clone()))?;
        let mut nodes = self.nodes.clone();
        nodes[pos] = node;
        Ok(WorldGraph::from_nodes(nodes))
    }

    /// Insert a node at `pos` (used for graph surgery that adds copies).
    pub fn with_inserted(&self, pos: usize, node: Node) -> WorldGraph {
        let mut nodes = self.nodes.clone();
        nodes.insert(pos.min(nodes.len()), node);
        WorldGraph::from_nodes(nodes)
    }

    /// A node name not yet used in the graph, derived from `base`.
    pub fn fresh_id(&self, base: &str) -> NodeId {
        if self.node(base).is_none() {
            return NodeId::new(base);
        }
        (2..)
            .map(|i| format!("{base}_{i}"))
            .find(|c| self.node(c).is_none())
            .map(NodeId::new)
            .expect("unbounded search")
    }

    /// Parent value tuples in product order (first parent most significant).
    pub fn parent_tuples(&self, node: &Node) -> Vec<Vec<String>> {
        let sets: Vec<&[String]> = node
            .parents
            .iter()
            .map(|p| self.node(p.as_str()).map(|n| n.values.as_slice()).unwrap_or(&[]))
            .collect();
        product(&sets)
    }
}

/// Cartesian product of value sets, first set most significant.
pub fn product(sets: &[&[String]]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for set in sets {
        let mut next = Vec::with_capacity(out.len() * set.len());
        for prefix in &out {
            for v in set.iter() {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

fn row_label(row: &[String]) -> String {
    row.join(", ")
}

/// Check every graph invariant, reporting the first violation.
pub fn validate_graph(graph: &WorldGraph) -> Result<(), ModelError> {
    let nodes = graph.nodes();
    if nodes.is_empty() {
        return Err(ModelError::EmptyGraph);
    }
    let mut seen = BTreeSet::new();
    for n in nodes {
        if n.id.as_str().is_empty() {
            return Err(ModelError::EmptyNodeId);
        }
        if !seen.insert(n.id.clone()) {
            return Err(ModelError::DuplicateNode(n.id.clone()));
        }
    }
    for n in nodes {
        let mut ps = BTreeSet::new();
        for p in &n.parents {
            if graph.node(p.as_str()).is_none() {
                return Err(ModelError::UnknownParent { node: n.id.clone(), parent: p.clone() });
            }
            if !ps.insert(p) {
                return Err(ModelError::DuplicateParent { node: n.id.clone(), parent: p.clone() });
            }
        }
    }
    topological_order(graph)?;

    let mut utility = None;
    let mut algorithm = None;
    for n in nodes {
        match n.kind {
            NodeKind::Utility { .. } => {
                if utility.replace(&n.id).is_some() {
                    return Err(ModelError::MultipleUtilityNodes(n.id.clone()));
                }
            }
            NodeKind::Algorithm { .. }
                if algorithm.replace(&n.id).is_some() => {
                    return Err(ModelError::MultipleAlgorithmNodes(n.id.clone()));
                }
            _ => {}
        }
    }
    if utility.is_none() {
        return Err(ModelError::MissingUtilityNode);
    }

    for n in nodes {
        validate_node(graph, n)?;
    }
    Ok(())
}

fn validate_node(graph: &WorldGraph, n: &Node) -> Result<(), ModelError> {
    if n.is_utility() {
        if !n.values.is_empty() || !graph.children(n.id.as_str()).is_empty() {
            return Err(ModelError::BadUtilityNode(n.id.clone()));
        }
    } else {
        let distinct: BTreeSet<_> = n.values.iter().collect();
        if n.values.is_empty() || distinct.len() != n.values.len() || n.values.iter().any(|v| v.is_empty()) {
            return Err(ModelError::BadValueSet(n.id.clone()));
        }
    }

    let tuples = graph.parent_tuples(n);
    match &n.kind {
        NodeKind::Chance { rows } => {
            let keyed = index_rows(n, rows.iter().map(|r| &r.parents), &tuples)?;
            for tuple in &tuples {
                let row = &rows[keyed[tuple]];
                let mut total = Rational::zero();
                let mut vals = BTreeSet::new();
                for (v, p) in &row.dist {
                    if n.value_index(v).is_none() {
                        return Err(ModelError::ValueOutOfRange { node: n.id.clone(), value: v.clone() });
                    }
                    if p.is_negative() || !vals.insert(v) {
                        return Err(ModelError::BadRow { node: n.id.clone(), row: row_label(tuple) });
                    }
                    total += p;
                }
                if !total.is_one() {
                    return Err(ModelError::NonNormalizedCpt { node: n.id.clone(), row: row_label(tuple) });
                }
            }
        }
        NodeKind::Deterministic { rows } => {
            index_rows(n, rows.iter().map(|r| &r.parents), &tuples)?;
            for r in rows {
                if n.value_index(&r.value).is_none() {
                    return Err(ModelError::ValueOutOfRange { node: n.id.clone(), value: r.value.clone() });
                }
            }
        }
        NodeKind::Utility { rows } => {
            index_rows(n, rows.iter().map(|r| &r.parents), &tuples)?;
        }
        NodeKind::Algorithm { pinned } => {
            if !n.parents.is_empty() {
                return Err(ModelError::AlgorithmWithParents(n.id.clone()));
            }
            if let Some(v) = pinned {
                if n.value_index(v).is_none() {
                    return Err(ModelError::ValueOutOfRange { node: n.id.clone(), value: v.clone() });
                }
            }
        }
        NodeKind::Decision { .. } => validate_decision(graph, n)?,
    }

    if let PredictorMode::Proof { fallback } = &n.predictor {
        let alg = n
            .parents
            .iter()
            .filter_map(|p| graph.node(p.as_str()))
            .find(|p| matches!(p.kind, NodeKind::Algorithm { .. }));
        match alg {
            Some(a) if a.value_index(fallback).is_some() => {}
            _ => return Err(ModelError::BadPredictor(n.id.clone())),
        }
    }
    Ok(())
}

/// Map every parent tuple to its row index, rejecting partial or duplicate tables.
fn index_rows<'a>(
    n: &Node,
    keys: impl Iterator<Item = &'a Vec<String>>,
    tuples: &[Vec<String>],
) -> Result<HashMap<Vec<String>, usize>, ModelError> {
    let valid: BTreeSet<&Vec<String>> = tuples.iter().collect();
    let mut keyed = HashMap::new();
    for (i, k) in keys.enumerate() {
        if !valid.contains(k) || keyed.insert(k.clone(), i).is_some() {
            return Err(ModelError::BadRow { node: n.id.clone(), row: row_label(k) });
        }
    }
    for t in tuples {
        if !keyed.contains_key(t) {
            return Err(ModelError::PartialTable { node: n.id.clone(), row: row_label(t) });
        }
    }
    Ok(keyed)
}

fn validate_decision(graph: &WorldGraph, n: &Node) -> Result<(), ModelError> {
    let (alg, obs) = decision_parents(graph, n).ok_or_else(|| ModelError::BadDecisionParents(n.id.clone()))?;
    if let Some(alg) = alg {
        let observations = obs.map(|o| o.values.len()).unwrap_or(1);
        for v in &alg.values {
            let parts: Vec<&str> = v.split(POLICY_SEPARATOR).collect();
            if parts.len() != observations || parts.iter().any(|a| n.value_index(a).is_none()) {
                return Err(ModelError::BadPolicyEncoding { node: n.id.clone(), value: v.clone() });
            }
        }
    }
    Ok(())
}

/// Split a decision node's parents into (algorithm parent, observation parent).
/// `None` when the parent list is not of that shape.
pub fn decision_parents<'g>(graph: &'g WorldGraph, n: &Node) -> Option<(Option<&'g Node>, Option<&'g Node>)> {
    let mut alg = None;
    let mut obs = None;
    for p in &n.parents {
        let pn = graph.node(p.as_str())?;
        if matches!(pn.kind, NodeKind::Algorithm { .. }) {
            if alg.replace(pn).is_some() {
                return None;
            }
        } else if obs.replace(pn).is_some() {
            return None;
        }
    }
    Some((alg, obs))
}

/// Parents before children; ties broken by node name.
pub fn topological_order(graph: &WorldGraph) -> Result<Vec<NodeId>, ModelError> {
    let nodes = graph.nodes();
    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for n in nodes {
        indegree.entry(n.id.as_str()).or_insert(0);
        for p in &n.parents {
            *indegree.entry(n.id.as_str()).or_insert(0) += 1;
            children.entry(p.as_str()).or_default().push(n.id.as_str());
        }
    }
    let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, &d)| d == 0).map(|(k, _)| *k).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(next) = ready.iter().next().copied() {
        ready.remove(next);
        order.push(NodeId::new(next));
        for c in children.get(next).into_iter().flatten() {
            let d = indegree.get_mut(c).expect("child registered");
            *d -= 1;
            if *d == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != indegree.len() {
        let stuck = indegree
            .iter()
            .find(|(k, &d)| d > 0 && !order.iter().any(|o| o.as_str() == **k))
            .map(|(k, _)| NodeId::new(*k))
            .expect("some node left");
        return Err(ModelError::CycleDetected(stuck));
    }
    Ok(order)
}

/// A total observation-to-action map, kept in declared observation order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Policy {
    entries: Vec<(String, String)>,
}

impl Policy {
    pub fn new(entries: Vec<(String, String)>) -> Self {
        Policy { entries }
    }

    /// A policy for a single-observation problem.
    pub fn constant(observation: &str, action: &str) -> Self {
        Policy { entries: vec![(observation.to_string(), action.to_string())] }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn action_for(&self, observation: &str) -> Option<&str> {
        self.entries.iter().find(|(o, _)| o == observation).map(|(_, a)| a.as_str())
    }

    /// The action taken when there is only one observation.
    pub fn sole_action(&self) -> Option<&str> {
        match self.entries.as_slice() {
            [(_, a)] => Some(a),
            _ => None,
        }
    }

    /// Identifier used as an algorithm-node value.
    pub fn id(&self) -> String {
        self.entries
            .iter()
            .map(|(_, a)| a.as_str())
            .collect::<Vec<_>>()
            .join(&POLICY_SEPARATOR.to_string())
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = self.sole_action() {
            return f.write_str(a);
        }
        let parts: Vec<String> = self.entries.iter().map(|(o, a)| format!("{o}->{a}")).collect();
        f.write_str(&parts.join("; "))
    }
}

impl Serialize for Policy {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (o, a) in &self.entries {
            map.serialize_entry(o, a)?;
        }
        map.end()
    }
}

/// All total maps from `observations` to `actions`, lexicographic in the
/// declared orders with the first observation most significant.
pub fn enumerate_maps(observations: &[String], actions: &[String], cap: usize) -> Result<Vec<Policy>, ModelError> {
    let too_many = || ModelError::SizeLimitExceeded {
        count: format!("{}^{}", actions.len(), observations.len()),
        cap,
    };
    let exp = u32::try_from(observations.len()).map_err(|_| too_many())?;
    let count = actions.len().checked_pow(exp).ok_or_else(too_many)?;
    if count > cap {
        return Err(too_many());
    }
    if actions.is_empty() {
        return Ok(Vec::new());
    }
    let mut digits = vec![0usize; observations.len()];
    let mut out = Vec::with_capacity(count);
    loop {
        out.push(Policy::new(
            observations
                .iter()
                .zip(&digits)
                .map(|(o, &d)| (o.clone(), actions[d].clone()))
                .collect(),
        ));
        // odometer: last observation varies fastest
        let mut i = digits.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < actions.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// A world graph plus the agent's interface to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionProblem {
    pub name: String,
    pub note: Option<String>,
    pub graph: WorldGraph,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub decision_node: NodeId,
    /// Utility values sorted best to worst.
    pub outcomes: Vec<Rational>,
    /// Time index at which policy selection happens. Algorithm readers tagged
    /// with an earlier stage see the original (pre-selection) algorithm.
    pub stage: i64,
    pub deterministic: bool,
    /// Agent-uncertainty prior over actions.
    pub prior: Vec<(String, Rational)>,
}

impl DecisionProblem {
    /// Validate and assemble a problem. An empty prior means uniform.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        graph: WorldGraph,
        actions: Vec<String>,
        observations: Vec<String>,
        decision_node: impl Into<NodeId>,
        outcomes: Vec<Rational>,
        stage: i64,
        deterministic: bool,
        prior: Vec<(String, Rational)>,
    ) -> Result<Self, ModelError> {
        let prior = if prior.is_empty() {
            let n = actions.len().max(1) as i64;
            actions.iter().map(|a| (a.clone(), Rational::new(1, n))).collect()
        } else {
            prior
        };
        let p = DecisionProblem {
            name: name.into(),
            note: None,
            graph,
            actions,
            observations,
            decision_node: decision_node.into(),
            outcomes,
            stage,
            deterministic,
            prior,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        validate_graph(&self.graph)?;
        let d = self
            .graph
            .node(self.decision_node.as_str())
            .ok_or_else(|| ModelError::UnknownNode(self.decision_node.clone()))?;
        match d.kind {
            NodeKind::Decision { .. } | NodeKind::Algorithm { .. } => {}
            _ => return Err(ModelError::NotADecisionNode(d.id.clone())),
        }
        if d.values != self.actions {
            return Err(ModelError::ActionMismatch(d.id.clone()));
        }
        match self.observation_node() {
            Some(o) => {
                let on = self.graph.node(o.as_str()).expect("validated parent");
                if on.values != self.observations {
                    return Err(ModelError::ObservationMismatch(o.clone()));
                }
            }
            None => {
                if self.observations.len() != 1 {
                    return Err(ModelError::SingleObservationRequired);
                }
            }
        }
        let distinct: BTreeSet<_> = self.observations.iter().collect();
        if distinct.len() != self.observations.len() {
            return Err(ModelError::SingleObservationRequired);
        }
        if let Some(alg) = self.graph.algorithm_nodes().next() {
            let reads = alg.id == d.id || d.parents.contains(&alg.id);
            let ids: Vec<String> = if alg.id == d.id {
                self.actions.clone()
            } else {
                enumerate_policies(self, DEFAULT_POLICY_CAP)?.iter().map(Policy::id).collect()
            };
            if !reads || alg.values != ids {
                return Err(ModelError::AlgorithmMismatch(alg.id.clone()));
            }
        }
        if matches!(d.kind, NodeKind::Algorithm { .. }) && self.observations.len() != 1 {
            return Err(ModelError::SingleObservationRequired);
        }
        if self.outcomes.windows(2).any(|w| w[0] <= w[1]) {
            return Err(ModelError::OutcomesNotSorted);
        }
        let mut total = Rational::zero();
        let mut keys = BTreeSet::new();
        for (a, p) in &self.prior {
            if !self.actions.contains(a) {
                return Err(ModelError::BadPrior(format!("unknown action `{a}`")));
            }
            if !keys.insert(a) {
                return Err(ModelError::BadPrior(format!("action `{a}` listed twice")));
            }
            if p.is_negative() {
                return Err(ModelError::BadPrior(format!("negative weight for `{a}`")));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(ModelError::BadPrior(format!("weights sum to {total}, not 1")));
        }
        let reachable = crate::inference::reachable_utilities(self).map_err(|e| ModelError::Inference(e.to_string()))?;
        for u in reachable {
            if !self.outcomes.contains(&u) {
                return Err(ModelError::MissingOutcome(u));
            }
        }
        Ok(())
    }

    pub fn decision(&self) -> &Node {
        self.graph.node(self.decision_node.as_str()).expect("validated decision node")
    }

    /// The decision node's non-algorithm parent, if it has one.
    pub fn observation_node(&self) -> Option<&NodeId> {
        let d = self.graph.node(self.decision_node.as_str())?;
        d.parents
            .iter()
            .find(|p| !matches!(self.graph.node(p.as_str()).map(|n| &n.kind), Some(NodeKind::Algorithm { .. })))
    }

    pub fn algorithm_node(&self) -> Option<&Node> {
        self.graph.algorithm_nodes().next()
    }

    pub fn prior_weight(&self, action: &str) -> Rational {
        self.prior
            .iter()
            .find(|(a, _)| a == action)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Owner of the primary decision node (`None` for an algorithm node).
    pub fn owner(&self) -> Option<&str> {
        match &self.decision().kind {
            NodeKind::Decision { owner } => Some(owner),
            _ => None,
        }
    }

    pub fn policy_from_actions(&self, actions: &[&str]) -> Result<Policy, ModelError> {
        if actions.len() != self.observations.len() || actions.iter().any(|a| !self.actions.iter().any(|x| x == a)) {
            return Err(ModelError::PolicyMismatch);
        }
        Ok(Policy::new(
            self.observations
                .iter()
                .zip(actions)
                .map(|(o, a)| (o.clone(), a.to_string()))
                .collect(),
        ))
    }
}

/// All policies of the problem, in lexicographic order.
pub fn enumerate_policies(problem: &DecisionProblem, cap: usize) -> Result<Vec<Policy>, ModelError> {
    enumerate_maps(&problem.observations, &problem.actions, cap)
}

/// Incremental graph construction with tables generated from closures over
/// parent values. Rows are emitted in parent product order.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn values_of(&self, id: &str) -> &[String] {
        self.nodes
            .iter()
            .find(|n| n.id.as_str() == id)
            .map(|n| n.values.as_slice())
            .unwrap_or_else(|| panic!("builder: parent `{id}` must be added first"))
    }

    fn tuples(&self, parents: &[&str]) -> Vec<Vec<String>> {
        let sets: Vec<&[String]> = parents.iter().map(|p| self.values_of(p)).collect();
        product(&sets)
    }

    fn push(&mut self, id: &str, values: &[&str], parents: &[&str], kind: NodeKind) -> &mut Self {
        self.nodes.push(Node {
            id: NodeId::new(id),
            values: values.iter().map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|p| NodeId::new(*p)).collect(),
            kind,
            stage: None,
            predictor: PredictorMode::Direct,
        });
        self
    }

    pub fn chance<F>(&mut self, id: &str, values: &[&str], parents: &[&str], f: F) -> &mut Self
    where
        F: Fn(&[&str]) -> Vec<(&'static str, Rational)>,
    {
        let rows = self
            .tuples(parents)
            .into_iter()
            .map(|t| {
                let refs: Vec<&str> = t.iter().map(String::as_str).collect();
                let dist = f(&refs).into_iter().map(|(v, p)| (v.to_string(), p)).collect();
                ChanceRow { parents: t, dist }
            })
            .collect();
        self.push(id, values, parents, NodeKind::Chance { rows })
    }

    pub fn det<F>(&mut self, id: &str, values: &[&str], parents: &[&str], f: F) -> &mut Self
    where
        F: Fn(&[&str]) -> String,
    {
        let rows = self
            .tuples(parents)
            .into_iter()
            .map(|t| {
                let refs: Vec<&str> = t.iter().map(String::as_str).collect();
                DetRow { value: f(&refs), parents: t }
            })
            .collect();
        self.push(id, values, parents, NodeKind::Deterministic { rows })
    }

    pub fn decision(&mut self, id: &str, owner: &str, values: &[&str], parents: &[&str]) -> &mut Self {
        self.push(id, values, parents, NodeKind::Decision { owner: owner.to_string() })
    }

    pub fn algorithm(&mut self, id: &str, values: &[String]) -> &mut Self {
        let refs: Vec<&str> = values.iter().map(String::as_str).collect();
        self.push(id, &refs, &[], NodeKind::Algorithm { pinned: None })
    }

    pub fn utility<F>(&mut self, id: &str, parents: &[&str], f: F) -> &mut Self
    where
        F: Fn(&[&str]) -> Rational,
    {
        let rows = self
            .tuples(parents)
            .into_iter()
            .map(|t| {
                let refs: Vec<&str> = t.iter().map(String::as_str).collect();
                UtilityRow { utility: f(&refs), parents: t }
            })
            .collect();
        self.push(id, &[], parents, NodeKind::Utility { rows })
    }

    /// Tag the most recently added node with a stage.
    pub fn at_stage(&mut self, stage: i64) -> &mut Self {
        self.nodes.last_mut().expect("a node to tag").stage = Some(stage);
        self
    }

    /// Mark the most recently added node as a proof-based predictor.
    pub fn proof_predictor(&mut self, fallback: &str) -> &mut Self {
        self.nodes.last_mut().expect("a node to tag").predictor = PredictorMode::Proof { fallback: fallback.to_string() };
        self
    }

    pub fn build(&mut self) -> Result<WorldGraph, ModelError> {
        WorldGraph::new(std::mem::take(&mut self.nodes))
    }

    pub fn build_unchecked(&mut self) -> WorldGraph {
        WorldGraph::from_nodes(std::mem::take(&mut self.nodes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn causal_pd() -> WorldGraph {
        GraphBuilder::new()
            .decision("A", "agent", &["C", "D"], &[])
            .chance("O", &["C", "D"], &[], |_| vec![("C", q(1, 2)), ("D", q(1, 2))])
            .utility("U", &["A", "O"], |v| match v {
                ["C", "C"] => 2.into(),
                ["C", "D"] => 0.into(),
                ["D", "C"] => 3.into(),
                _ => 1.into(),
            })
            .build_unchecked()
    }

    fn fig1() -> WorldGraph {
        GraphBuilder::new()
            .chance("S", &["scandal", "none"], &[], |_| vec![("scandal", q(1, 250)), ("none", q(249, 250))])
            .chance("R", &["send", "silent"], &["S"], |_| vec![("send", q(1, 2)), ("silent", q(1, 2))])
            .decision("P", "agent", &["Pay", "Refuse"], &["R"])
            .utility("U", &["S", "P"], |_| 0.into())
            .build_unchecked()
    }

    #[test]
    fn pd_graph_is_valid() {
        assert_eq!(validate_graph(&causal_pd()), Ok(()));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let mut nodes = causal_pd().nodes().to_vec();
        nodes[0].parents.push(NodeId::new("A"));
        let g = WorldGraph::from_nodes(nodes);
        assert_eq!(validate_graph(&g), Err(ModelError::CycleDetected(NodeId::new("A"))));
    }

    #[test]
    fn unnormalized_row_is_rejected() {
        let g = GraphBuilder::new()
            .chance("O", &["C", "D"], &[], |_| vec![("C", q(1, 2)), ("D", q(2, 5))])
            .utility("U", &["O"], |_| 0.into())
            .build_unchecked();
        assert!(matches!(validate_graph(&g), Err(ModelError::NonNormalizedCpt { node, .. }) if node.as_str() == "O"));
    }

    #[test]
    fn partial_table_and_missing_utility() {
        let mut nodes = causal_pd().nodes().to_vec();
        if let NodeKind::Utility { rows } = &mut nodes[2].kind {
            rows.pop();
        }
        assert!(matches!(
            validate_graph(&WorldGraph::from_nodes(nodes.clone())),
            Err(ModelError::PartialTable { .. })
        ));
        nodes.pop();
        assert_eq!(validate_graph(&WorldGraph::from_nodes(nodes)), Err(ModelError::MissingUtilityNode));
    }

    #[test]
    fn fig1_topological_order() {
        let order: Vec<String> = topological_order(&fig1()).unwrap().iter().map(|n| n.to_string()).collect();
        assert_eq!(order, strs(&["S", "R", "P", "U"]));
    }

    #[test]
    fn single_node_order() {
        let g = GraphBuilder::new().utility("U", &[], |_| 0.into()).build_unchecked();
        assert_eq!(topological_order(&g).unwrap(), vec![NodeId::new("U")]);
    }

    #[test]
    fn policy_enumeration_is_lexicographic() {
        let ps = enumerate_maps(&strs(&["o1", "o2"]), &strs(&["Pay", "Refuse"]), 10).unwrap();
        let ids: Vec<String> = ps.iter().map(Policy::id).collect();
        assert_eq!(ids, strs(&["Pay.Pay", "Pay.Refuse", "Refuse.Pay", "Refuse.Refuse"]));
        let single = enumerate_maps(&strs(&["obs"]), &strs(&["Pay", "Refuse"]), 10).unwrap();
        assert_eq!(single.iter().map(|p| p.to_string()).collect::<Vec<_>>(), strs(&["Pay", "Refuse"]));
    }

    #[test]
    fn policy_cap_is_enforced() {
        let obs: Vec<String> = (0..21).map(|i| format!("o{i}")).collect();
        let err = enumerate_maps(&obs, &strs(&["a", "b"]), DEFAULT_POLICY_CAP).unwrap_err();
        assert!(matches!(err, ModelError::SizeLimitExceeded { .. }));
        assert_eq!(enumerate_maps(&obs[..12], &strs(&["a", "b"]), 1 << 12).unwrap().len(), 1 << 12);
    }

    #[test]
    fn problem_rejects_unsorted_outcomes() {
        let err = DecisionProblem::new(
            "pd",
            causal_pd(),
            strs(&["C", "D"]),
            strs(&["start"]),
            "A",
            vec![0.into(), 1.into(), 2.into(), 3.into()],
            0,
            false,
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, ModelError::OutcomesNotSorted);
    }

    #[test]
    fn problem_requires_every_reachable_outcome() {
        let err = DecisionProblem::new(
            "pd",
            causal_pd(),
            strs(&["C", "D"]),
            strs(&["start"]),
            "A",
            vec![3.into(), 2.into(), 1.into()],
            0,
            false,
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, ModelError::MissingOutcome(0.into()));
    }
}
