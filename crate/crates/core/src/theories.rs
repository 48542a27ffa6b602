//! Decision procedures. Each returns a [`Prescription`]: the chosen action or
//! policy plus the score of every alternative it considered.
//!
//! Ties go to the first alternative in declared order.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::inference::{
    algorithm_intervention, condition, expected_utility, intervene_after_evidence, joint_distribution,
    split_algorithm_readers, uniform_binding, Binding, Bindings, Event, InferenceError,
};
use crate::proofudt::{self, ProofUdtError, SearchTrace};
use crate::rational::Rational;
use crate::worldmodel::{
    decision_parents, enumerate_policies, DecisionProblem, ModelError, Node, NodeId, NodeKind, Policy,
    WorldGraph, DEFAULT_POLICY_CAP, POLICY_SEPARATOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TheoryId {
    Edt,
    Cdt,
    UEdt,
    UCdt,
    GUdt,
    PUdt,
}

impl TheoryId {
    pub const ALL: [TheoryId; 6] = [
        TheoryId::Edt,
        TheoryId::Cdt,
        TheoryId::UEdt,
        TheoryId::UCdt,
        TheoryId::GUdt,
        TheoryId::PUdt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoryId::Edt => "EDT",
            TheoryId::Cdt => "CDT",
            TheoryId::UEdt => "U-EDT",
            TheoryId::UCdt => "U-CDT",
            TheoryId::GUdt => "G-UDT",
            TheoryId::PUdt => "P-UDT",
        }
    }
}

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoryId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_uppercase();
        TheoryId::ALL
            .into_iter()
            .find(|t| t.name().replace('-', "") == norm)
            .ok_or_else(|| format!("unknown theory `{s}`"))
    }
}

impl Serialize for TheoryId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Which counterfactual an updateless or staged evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Causal,
    Evidential,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TheoryError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    ProofUdt(#[from] ProofUdtError),
    #[error("graph must contain exactly one algorithm node")]
    NotAnAlgorithmNode,
    #[error("unknown observation `{0}`")]
    UnknownObservation(String),
    #[error("no decision node of the agent is tagged with stage {0}")]
    UnknownStage(i64),
    #[error("{theory} is not supported here: {reason}")]
    UnsupportedTheory { theory: TheoryId, reason: String },
}

impl TheoryError {
    /// Stable error code: the innermost variant name.
    pub fn kind(&self) -> String {
        match self {
            TheoryError::Inference(InferenceError::Model(m)) | TheoryError::Model(m) => variant_name(m),
            TheoryError::Inference(i) => variant_name(i),
            TheoryError::ProofUdt(p) => p.kind(),
            other => variant_name(other),
        }
    }
}

pub(crate) fn variant_name(e: &impl fmt::Debug) -> String {
    let s = format!("{e:?}");
    s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choice {
    Action(String),
    Policy(Policy),
}

impl Choice {
    /// The action this choice takes on `observation`.
    pub fn action_for(&self, observation: &str) -> Option<&str> {
        match self {
            Choice::Action(a) => Some(a),
            Choice::Policy(p) => p.action_for(observation),
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Action(a) => f.write_str(a),
            Choice::Policy(p) => p.fmt(f),
        }
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// One evaluated alternative. `value` is an expected utility, or for P-UDT
/// the best outcome provably implied, with the implication as `witness`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Score {
    pub alternative: String,
    pub value: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Score {
    fn eu(alternative: impl Into<String>, eu: Rational) -> Self {
        Score { alternative: alternative.into(), value: Some(eu), witness: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prescription {
    pub theory: TheoryId,
    pub chosen: Choice,
    pub scores: Vec<Score>,
    /// Agent-uncertainty prior used for conditioning (EDT family).
    pub prior: Option<Vec<(String, Rational)>>,
    pub trace: Option<SearchTrace>,
}

impl Prescription {
    /// Score of the chosen alternative, when it was scored as a whole.
    pub fn value(&self) -> Option<&Rational> {
        let label = self.chosen.to_string();
        self.scores.iter().find(|s| s.alternative == label).and_then(|s| s.value.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub policy_cap: usize,
    /// Re-check every provability verdict one world further up the chain.
    pub check_stability: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { policy_cap: DEFAULT_POLICY_CAP, check_stability: false }
    }
}

/// First maximum in declared order.
fn argmax<T: Clone>(scored: &[(T, Rational)]) -> Option<T> {
    let mut best: Option<&(T, Rational)> = None;
    for s in scored {
        if best.is_none_or(|b| s.1 > b.1) {
            best = Some(s);
        }
    }
    best.map(|b| b.0.clone())
}

fn is_algorithm(graph: &WorldGraph, id: &NodeId) -> bool {
    matches!(graph.node(id.as_str()).map(|n| &n.kind), Some(NodeKind::Algorithm { .. }))
}

fn reads_algorithm(graph: &WorldGraph, n: &Node) -> bool {
    n.parents.iter().any(|p| is_algorithm(graph, p))
}

/// Weight of a policy identifier under the product of per-observation priors.
fn policy_weight(problem: &DecisionProblem, id: &str) -> Rational {
    id.split(POLICY_SEPARATOR)
        .map(|a| problem.prior_weight(a))
        .fold(Rational::one(), |acc, w| acc * w)
}

fn algorithm_prior(problem: &DecisionProblem, alg: &Node) -> Binding {
    if alg.id == problem.decision_node {
        return Binding::Mixed(problem.prior.clone());
    }
    Binding::Mixed(alg.values.iter().map(|v| (v.clone(), policy_weight(problem, v))).collect())
}

/// Bindings under agent uncertainty: the primary decision follows the
/// problem's prior, the algorithm the induced product prior over policies,
/// and any other free decision node is uniform.
pub fn prior_bindings(problem: &DecisionProblem) -> Bindings {
    prior_bindings_for(problem, &problem.graph)
}

fn prior_bindings_for(problem: &DecisionProblem, graph: &WorldGraph) -> Bindings {
    let mut b = Bindings::new();
    for n in graph.nodes() {
        match n.kind {
            NodeKind::Algorithm { pinned: None } => {
                b.insert(n.id.clone(), algorithm_prior(problem, n));
            }
            NodeKind::Decision { .. } if !reads_algorithm(graph, n) => {
                let binding = if n.id == problem.decision_node {
                    Binding::Mixed(problem.prior.clone())
                } else {
                    uniform_binding(n)
                };
                b.insert(n.id.clone(), binding);
            }
            _ => {}
        }
    }
    b
}

fn observation_event(problem: &DecisionProblem, observation: &str) -> Result<Event, TheoryError> {
    if !problem.observations.iter().any(|o| o == observation) {
        return Err(TheoryError::UnknownObservation(observation.to_string()));
    }
    Ok(match problem.observation_node() {
        Some(o) => Event::is(o.clone(), observation),
        None => Event::always(),
    })
}

fn action_prescription(theory: TheoryId, scored: Vec<(String, Rational)>) -> Prescription {
    let chosen = argmax(&scored).expect("at least one action");
    Prescription {
        theory,
        chosen: Choice::Action(chosen),
        scores: scored.into_iter().map(|(a, eu)| Score::eu(a, eu)).collect(),
        prior: None,
        trace: None,
    }
}

/// Conditional expected utility given the observation and each action.
pub fn edt_decide(problem: &DecisionProblem, observation: &str) -> Result<Prescription, TheoryError> {
    let evidence = observation_event(problem, observation)?;
    let joint = joint_distribution(&problem.graph, &prior_bindings(problem))?;
    let mut scored = Vec::new();
    for a in &problem.actions {
        let event = evidence.and(&Event::is(problem.decision_node.clone(), a.clone()));
        let posterior = condition(&joint, &event)?;
        scored.push((a.clone(), expected_utility(&posterior, &problem.graph)?));
    }
    let mut p = action_prescription(TheoryId::Edt, scored);
    p.prior = Some(problem.prior.clone());
    Ok(p)
}

/// Update on the observation, then sever the decision node and set it.
pub fn cdt_decide(problem: &DecisionProblem, observation: &str) -> Result<Prescription, TheoryError> {
    let evidence = observation_event(problem, observation)?;
    let bindings = prior_bindings(problem);
    let mut scored = Vec::new();
    for a in &problem.actions {
        let d = intervene_after_evidence(&problem.graph, &bindings, &evidence, problem.decision_node.as_str(), a)?;
        scored.push((a.clone(), expected_utility(&d, &problem.graph)?));
    }
    Ok(action_prescription(TheoryId::Cdt, scored))
}

/// The graph seen at policy-selection time: algorithm readers tagged with a
/// stage before the problem's stage read a separate copy of the original
/// algorithm, which stays at the prior. The decision itself always follows
/// the selected policy.
fn updateless_graph(problem: &DecisionProblem) -> Result<WorldGraph, TheoryError> {
    let Some(alg) = problem.algorithm_node() else {
        return Ok(problem.graph.clone());
    };
    let upstream: Vec<NodeId> = problem
        .graph
        .children(alg.id.as_str())
        .iter()
        .filter(|c| c.id != problem.decision_node && c.stage.is_some_and(|s| s < problem.stage))
        .map(|c| c.id.clone())
        .collect();
    if upstream.is_empty() {
        return Ok(problem.graph.clone());
    }
    let copy = problem.graph.fresh_id(&format!("{}_original", alg.id));
    Ok(split_algorithm_readers(&problem.graph, alg.id.as_str(), &upstream, &copy)?)
}

/// Ex-ante expected utility of committing to `policy` at the problem's stage.
pub fn policy_value(problem: &DecisionProblem, policy: &Policy, base: Base) -> Result<Rational, TheoryError> {
    let graph = updateless_graph(problem)?;
    policy_value_in(problem, &graph, policy, base)
}

fn policy_value_in(problem: &DecisionProblem, graph: &WorldGraph, policy: &Policy, base: Base) -> Result<Rational, TheoryError> {
    let mut bindings = prior_bindings_for(problem, graph);
    let alg = problem.algorithm_node().map(|a| a.id.clone());
    let d = problem.decision_node.clone();
    match (base, alg) {
        (Base::Causal, Some(alg)) => {
            bindings.insert(alg, Binding::Value(policy.id()));
            let joint = joint_distribution(graph, &bindings)?;
            Ok(expected_utility(&joint, graph)?)
        }
        (Base::Causal, None) => {
            bindings.insert(d, Binding::Policy(policy.clone()));
            let joint = joint_distribution(graph, &bindings)?;
            Ok(expected_utility(&joint, graph)?)
        }
        (Base::Evidential, Some(alg)) => {
            let joint = joint_distribution(graph, &bindings)?;
            let posterior = condition(&joint, &Event::is(alg, policy.id()))?;
            Ok(expected_utility(&posterior, graph)?)
        }
        (Base::Evidential, None) => {
            let joint = joint_distribution(graph, &bindings)?;
            let follows = Event::any_of(policy.entries().iter().map(|(o, a)| {
                let act = Event::is(d.clone(), a.clone());
                match problem.observation_node() {
                    Some(obs) => Event::is(obs.clone(), o.clone()).and(&act),
                    None => act,
                }
            }));
            let posterior = condition(&joint, &follows)?;
            Ok(expected_utility(&posterior, graph)?)
        }
    }
}

fn policy_prescription(theory: TheoryId, scored: Vec<(Policy, Rational)>) -> Prescription {
    let chosen = argmax(&scored).expect("at least one policy");
    Prescription {
        theory,
        chosen: Choice::Policy(chosen),
        scores: scored.into_iter().map(|(p, eu)| Score::eu(p.to_string(), eu)).collect(),
        prior: None,
        trace: None,
    }
}

/// Policy selection: the best observation-to-action map evaluated ex ante.
pub fn updateless_select(problem: &DecisionProblem, base: Base, cap: usize) -> Result<Prescription, TheoryError> {
    let graph = updateless_graph(problem)?;
    let mut scored = Vec::new();
    for pi in enumerate_policies(problem, cap)? {
        let v = policy_value_in(problem, &graph, &pi, base)?;
        scored.push((pi, v));
    }
    let theory = match base {
        Base::Causal => TheoryId::UCdt,
        Base::Evidential => TheoryId::UEdt,
    };
    let mut p = policy_prescription(theory, scored);
    if base == Base::Evidential {
        p.prior = Some(problem.prior.clone());
    }
    Ok(p)
}

/// Intervene on the algorithm node itself, so every declared copy follows.
pub fn graphical_udt_select(problem: &DecisionProblem, cap: usize) -> Result<Prescription, TheoryError> {
    let mut algs = problem.graph.algorithm_nodes();
    let (Some(alg), None) = (algs.next(), algs.next()) else {
        return Err(TheoryError::NotAnAlgorithmNode);
    };
    let bindings = prior_bindings(problem);
    let mut scored = Vec::new();
    for pi in enumerate_policies(problem, cap)? {
        let g = algorithm_intervention(&problem.graph, alg.id.as_str(), &pi)?;
        let joint = joint_distribution(&g, &bindings)?;
        scored.push((pi, expected_utility(&joint, &g)?));
    }
    Ok(policy_prescription(TheoryId::GUdt, scored))
}

/// Proof-based UDT with a quined agent.
pub fn pudt_decide(problem: &DecisionProblem, settings: &Settings) -> Result<Prescription, TheoryError> {
    let run = proofudt::solve(problem, settings.policy_cap, settings.check_stability)?;
    Ok(Prescription {
        theory: TheoryId::PUdt,
        chosen: Choice::Policy(run.chosen.clone()),
        scores: run
            .proved
            .iter()
            .map(|(pi, best)| Score {
                alternative: pi.to_string(),
                value: best.as_ref().map(|(o, _)| o.clone()),
                witness: best.as_ref().map(|(_, w)| w.clone()),
            })
            .collect(),
        prior: None,
        trace: Some(run.trace),
    })
}

fn free_decisions(graph: &WorldGraph) -> Vec<&Node> {
    graph
        .nodes()
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Decision { .. }) && !reads_algorithm(graph, n))
        .collect()
}

fn owner_of(n: &Node) -> Option<&str> {
    match &n.kind {
        NodeKind::Decision { owner } => Some(owner),
        _ => None,
    }
}

/// Observation labels of a free decision node: its parent's values, or a
/// single placeholder when it observes nothing.
fn node_observations(graph: &WorldGraph, n: &Node) -> (Option<NodeId>, Vec<String>) {
    let obs = decision_parents(graph, n).and_then(|(_, o)| o);
    match obs {
        Some(o) => (Some(o.id.clone()), o.values.clone()),
        None => (None, vec!["-".to_string()]),
    }
}

fn option_value(
    graph: &WorldGraph,
    bindings: &Bindings,
    evidence: &Event,
    node: &NodeId,
    option: &str,
    base: Base,
) -> Result<Rational, InferenceError> {
    match base {
        Base::Causal => {
            let d = intervene_after_evidence(graph, bindings, evidence, node.as_str(), option)?;
            expected_utility(&d, graph)
        }
        Base::Evidential => {
            let joint = joint_distribution(graph, bindings)?;
            let posterior = condition(&joint, &evidence.and(&Event::is(node.clone(), option)))?;
            expected_utility(&posterior, graph)
        }
    }
}

/// Best option per observation; unreachable observations default to the first option.
fn best_response(graph: &WorldGraph, bindings: &Bindings, n: &Node, base: Base) -> Result<Policy, TheoryError> {
    let (obs, labels) = node_observations(graph, n);
    let mut entries = Vec::new();
    for o in labels {
        let evidence = match &obs {
            Some(id) => Event::is(id.clone(), o.clone()),
            None => Event::always(),
        };
        let mut scored = Vec::new();
        let mut reachable = true;
        for opt in &n.values {
            match option_value(graph, bindings, &evidence, &n.id, opt, base) {
                Ok(v) => scored.push((opt.clone(), v)),
                Err(InferenceError::ZeroProbabilityEvent(_)) => {
                    reachable = false;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let pick = if reachable { argmax(&scored) } else { None };
        entries.push((o, pick.unwrap_or_else(|| n.values[0].clone())));
    }
    Ok(Policy::new(entries))
}

/// Prescription of `theory` at time `stage` in a scenario with staged
/// decision nodes.
///
/// Decisions after `stage` are solved backwards with the theory's own
/// counterfactual. Nodes owned by someone other than the agent run the
/// policy the agent adopts at that stage (they are copies). Decisions before
/// `stage` are held at their first option.
pub fn selfmod_evaluate(problem: &DecisionProblem, theory: TheoryId, stage: i64) -> Result<Prescription, TheoryError> {
    let base = match theory {
        TheoryId::Cdt | TheoryId::UCdt => Base::Causal,
        TheoryId::Edt | TheoryId::UEdt => Base::Evidential,
        other => {
            return Err(TheoryError::UnsupportedTheory {
                theory: other,
                reason: "staged evaluation needs a causal or evidential counterfactual".into(),
            })
        }
    };
    let graph = &problem.graph;
    let owner = problem.owner().ok_or(TheoryError::UnknownStage(stage))?;
    let decisions = free_decisions(graph);
    let target = decisions
        .iter()
        .find(|n| owner_of(n) == Some(owner) && n.stage == Some(stage))
        .ok_or(TheoryError::UnknownStage(stage))?;

    let mut bindings = prior_bindings(problem);
    let later: BTreeSet<i64> = decisions.iter().filter_map(|n| n.stage).filter(|&s| s > stage).collect();
    for &s in later.iter().rev() {
        let at_s: Vec<&&Node> = decisions.iter().filter(|n| n.stage == Some(s)).collect();
        let mut adopted: Vec<(NodeId, Policy)> = Vec::new();
        for n in at_s.iter().filter(|n| owner_of(n) == Some(owner)) {
            adopted.push((n.id.clone(), best_response(graph, &bindings, n, base)?));
        }
        for n in at_s.iter().filter(|n| owner_of(n) != Some(owner)) {
            let (_, labels) = node_observations(graph, n);
            let mirror = adopted.iter().find_map(|(_, p)| {
                let entries: Option<Vec<(String, String)>> = labels
                    .iter()
                    .map(|o| {
                        p.action_for(o)
                            .filter(|a| n.value_index(a).is_some())
                            .map(|a| (o.clone(), a.to_string()))
                    })
                    .collect();
                entries.map(Policy::new)
            });
            if let Some(p) = mirror {
                adopted.push((n.id.clone(), p));
            }
        }
        for (id, p) in adopted {
            bindings.insert(id, Binding::Policy(p));
        }
    }
    for n in decisions.iter().filter(|n| n.stage.is_some_and(|s| s < stage)) {
        bindings.insert(n.id.clone(), Binding::Value(n.values[0].clone()));
    }
    let mut scored = Vec::new();
    for opt in &target.values {
        scored.push((opt.clone(), option_value(graph, &bindings, &Event::always(), &target.id, opt, base)?));
    }
    let mut p = action_prescription(theory, scored);
    if base == Base::Evidential {
        p.prior = Some(problem.prior.clone());
    }
    Ok(p)
}

/// Whether the problem has later decisions of the same agent at other stages.
pub fn is_staged(problem: &DecisionProblem) -> bool {
    let d = problem.decision();
    let Some(stage) = d.stage else { return false };
    let owner = owner_of(d);
    free_decisions(&problem.graph)
        .iter()
        .any(|n| n.id != d.id && owner_of(n) == owner && n.stage.is_some_and(|s| s != stage))
}

/// Evaluate `theory` on `problem` the way the batch runner does.
///
/// EDT and CDT decide per observation; with several observations the result
/// is the composed policy. Staged scenarios go through [`selfmod_evaluate`]
/// at the problem's stage.
pub fn prescribe(problem: &DecisionProblem, theory: TheoryId, settings: &Settings) -> Result<Prescription, TheoryError> {
    match theory {
        TheoryId::Edt | TheoryId::Cdt => {
            if is_staged(problem) {
                return selfmod_evaluate(problem, theory, problem.stage);
            }
            let decide = if theory == TheoryId::Edt { edt_decide } else { cdt_decide };
            if let [o] = problem.observations.as_slice() {
                return decide(problem, o);
            }
            let mut entries = Vec::new();
            let mut scores = Vec::new();
            for o in &problem.observations {
                let p = decide(problem, o)?;
                for s in p.scores {
                    scores.push(Score { alternative: format!("{o}: {}", s.alternative), ..s });
                }
                entries.push((o.clone(), p.chosen.to_string()));
            }
            Ok(Prescription {
                theory,
                chosen: Choice::Policy(Policy::new(entries)),
                scores,
                prior: (theory == TheoryId::Edt).then(|| problem.prior.clone()),
                trace: None,
            })
        }
        TheoryId::UEdt => updateless_select(problem, Base::Evidential, settings.policy_cap),
        TheoryId::UCdt => updateless_select(problem, Base::Causal, settings.policy_cap),
        TheoryId::GUdt => graphical_udt_select(problem, settings.policy_cap),
        TheoryId::PUdt => pudt_decide(problem, settings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_names_round_trip() {
        for t in TheoryId::ALL {
            assert_eq!(t.name().parse::<TheoryId>().unwrap(), t);
        }
        assert_eq!("ucdt".parse::<TheoryId>().unwrap(), TheoryId::UCdt);
        assert!("FDT".parse::<TheoryId>().is_err());
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let s = vec![("a", Rational::from(1)), ("b", Rational::from(2)), ("c", Rational::from(2))];
        assert_eq!(argmax(&s), Some("b"));
    }

    #[test]
    fn error_kinds_are_innermost_variants() {
        let e = TheoryError::Inference(InferenceError::ZeroProbabilityEvent("x".into()));
        assert_eq!(e.kind(), "ZeroProbabilityEvent");
        let e = TheoryError::Inference(InferenceError::Model(ModelError::MissingUtilityNode));
        assert_eq!(e.kind(), "MissingUtilityNode");
        assert_eq!(TheoryError::UnknownStage(4).kind(), "UnknownStage");
    }
}
