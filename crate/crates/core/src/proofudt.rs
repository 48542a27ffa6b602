//! Proof-based UDT over modal encodings of deterministic problems.
//!
//! The environment becomes atoms `E_o` defined from agent atoms `A_π`, the
//! agent a system defining each `A_π`, and provability is decided by the GL
//! engine in [`crate::provability`].

use serde::Serialize;

use crate::inference::{joint_distribution, split_algorithm_readers, utility_lottery, Binding, InferenceError};
use crate::provability::{ChainValues, Evaluator, ModalFormula, ModalSystem, ProvabilityError};
use crate::rational::Rational;
use crate::theories::{prior_bindings, variant_name};
use crate::worldmodel::{enumerate_policies, DecisionProblem, ModelError, NodeId, NodeKind, Policy, PredictorMode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProofUdtError {
    #[error("stochastic environment: {0}")]
    StochasticEnvironment(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Provability(#[from] ProvabilityError),
}

impl ProofUdtError {
    pub fn kind(&self) -> String {
        match self {
            ProofUdtError::Model(m) | ProofUdtError::Inference(InferenceError::Model(m)) => variant_name(m),
            ProofUdtError::Inference(i) => variant_name(i),
            ProofUdtError::Provability(p) => variant_name(p),
            other => variant_name(other),
        }
    }
}

/// Atom-safe rendering: `-100` becomes `neg100`, `8/5` becomes `8_5`.
pub fn outcome_atom(o: &Rational) -> String {
    let s = o.to_string();
    let body = s.strip_prefix('-').map(|r| format!("neg{r}")).unwrap_or(s);
    format!("E_{}", body.replace('/', "_"))
}

/// `A_` followed by the policy's actions joined with `__`.
pub fn policy_atom(p: &Policy) -> String {
    let parts: Vec<String> = p
        .entries()
        .iter()
        .map(|(_, a)| a.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect())
        .collect();
    format!("A_{}", parts.join("__"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModalEnvironment {
    pub system: ModalSystem,
    /// Outcomes best first, with their atoms.
    pub outcomes: Vec<(Rational, String)>,
    /// Policies in declared order, with their atoms.
    pub policies: Vec<(Policy, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModalAgent {
    pub system: ModalSystem,
}

impl ModalEnvironment {
    /// An environment given directly as outcome per policy.
    pub fn direct(outcomes: Vec<Rational>, table: Vec<(Policy, Rational)>) -> Self {
        let outs: Vec<(Rational, String)> = outcomes.iter().map(|o| (o.clone(), outcome_atom(o))).collect();
        let policies: Vec<(Policy, String)> = table.iter().map(|(p, _)| (p.clone(), policy_atom(p))).collect();
        let mut system = ModalSystem::new();
        for (o, e) in &outs {
            let d = ModalFormula::disjunction(
                table.iter().filter(|(_, v)| v == o).map(|(p, _)| ModalFormula::atom(policy_atom(p))),
            );
            system.define(e.clone(), d);
        }
        ModalEnvironment { system, outcomes: outs, policies }
    }

    fn policy_formula(&self, k: usize) -> ModalFormula {
        ModalFormula::atom(self.policies[k].1.clone())
    }
}

/// How the proof-based predictors resolve in one case of the compilation.
#[derive(Clone, Copy)]
enum PredictorCase {
    Proves(usize),
    Fallback,
}

/// Encode a deterministic problem. Direct predictors of the algorithm read
/// the enacted policy; proof-based predictors read the first policy whose
/// selection is provable, or their declared fallback.
pub fn compile_to_modal(problem: &DecisionProblem, cap: usize) -> Result<ModalEnvironment, ProofUdtError> {
    if !problem.deterministic {
        return Err(ProofUdtError::StochasticEnvironment(format!("problem `{}` is not declared deterministic", problem.name)));
    }
    for n in problem.graph.nodes() {
        if let NodeKind::Chance { rows } = &n.kind {
            let mixed = rows.iter().any(|r| r.dist.iter().any(|(_, p)| !p.is_zero() && !p.is_one()));
            if mixed {
                return Err(ProofUdtError::StochasticEnvironment(format!("chance node `{}` is not 0/1", n.id)));
            }
        }
    }
    let policies = enumerate_policies(problem, cap)?;
    let mut graph = problem.graph.clone();
    let alg = problem.algorithm_node().map(|a| a.id.clone());
    let mut predicted: Option<NodeId> = None;
    if let Some(alg) = &alg {
        let readers: Vec<NodeId> = graph
            .children(alg.as_str())
            .iter()
            .filter(|c| matches!(c.predictor, PredictorMode::Proof { .. }))
            .map(|c| c.id.clone())
            .collect();
        if !readers.is_empty() {
            let copy = graph.fresh_id(&format!("{alg}_proved"));
            graph = split_algorithm_readers(&graph, alg.as_str(), &readers, &copy)?;
            predicted = Some(copy);
        }
    }
    let cases: Vec<PredictorCase> = if predicted.is_some() {
        (0..policies.len()).map(PredictorCase::Proves).chain([PredictorCase::Fallback]).collect()
    } else {
        vec![PredictorCase::Fallback]
    };
    let atoms: Vec<String> = policies.iter().map(policy_atom).collect();
    let provable = |k: usize| ModalFormula::boxed(ModalFormula::atom(atoms[k].clone()));
    let case_condition = |c: PredictorCase| -> ModalFormula {
        if predicted.is_none() {
            return ModalFormula::Top;
        }
        match c {
            PredictorCase::Proves(k) => {
                ModalFormula::conjunction([provable(k)].into_iter().chain((0..k).map(|j| ModalFormula::not(provable(j)))))
            }
            PredictorCase::Fallback => ModalFormula::conjunction((0..policies.len()).map(|j| ModalFormula::not(provable(j)))),
        }
    };

    let mut terms: Vec<Vec<ModalFormula>> = vec![Vec::new(); problem.outcomes.len()];
    for (k, pi) in policies.iter().enumerate() {
        for &case in &cases {
            let mut bindings = prior_bindings(problem);
            for n in graph.nodes() {
                if matches!(n.kind, NodeKind::Decision { .. }) && n.id != problem.decision_node && bindings.contains_key(&n.id) {
                    return Err(ProofUdtError::StochasticEnvironment(format!("decision node `{}` is not the agent's", n.id)));
                }
            }
            match &alg {
                Some(a) => {
                    bindings.insert(a.clone(), Binding::Value(pi.id()));
                }
                None => {
                    bindings.insert(problem.decision_node.clone(), Binding::Policy(pi.clone()));
                }
            }
            let mut g = graph.clone();
            if let Some(copy) = &predicted {
                match case {
                    PredictorCase::Proves(j) => {
                        bindings.insert(copy.clone(), Binding::Value(policies[j].id()));
                    }
                    PredictorCase::Fallback => {
                        // each proof-based predictor falls back to its own default
                        let readers: Vec<(NodeId, String)> = g
                            .children(copy.as_str())
                            .iter()
                            .filter_map(|c| match &c.predictor {
                                PredictorMode::Proof { fallback } => Some((c.id.clone(), fallback.clone())),
                                PredictorMode::Direct => None,
                            })
                            .collect();
                        for (i, (r, fb)) in readers.iter().enumerate() {
                            let own = g.fresh_id(&format!("{copy}_{i}"));
                            g = split_algorithm_readers(&g, copy.as_str(), std::slice::from_ref(r), &own)?;
                            bindings.insert(own, Binding::Value(fb.clone()));
                        }
                        bindings.insert(copy.clone(), Binding::Value(policies[0].id()));
                    }
                }
            }
            let joint = joint_distribution(&g, &bindings)?;
            let lottery = utility_lottery(&joint, &g)?;
            let [(u, _)] = lottery.as_slice() else {
                return Err(ProofUdtError::StochasticEnvironment(format!("policy {pi} has an uncertain outcome")));
            };
            let slot = problem.outcomes.iter().position(|o| o == u).ok_or(ModelError::MissingOutcome(u.clone()))?;
            terms[slot].push(ModalFormula::and(ModalFormula::atom(atoms[k].clone()), case_condition(case)));
        }
    }
    let mut system = ModalSystem::new();
    let outcomes: Vec<(Rational, String)> = problem.outcomes.iter().map(|o| (o.clone(), outcome_atom(o))).collect();
    for ((_, e), t) in outcomes.iter().zip(terms) {
        let t = t.into_iter().map(simplify_top).collect::<Vec<_>>();
        system.define(e.clone(), ModalFormula::disjunction(t));
    }
    Ok(ModalEnvironment { system, outcomes, policies: policies.into_iter().zip(atoms).collect() })
}

fn simplify_top(f: ModalFormula) -> ModalFormula {
    match f {
        ModalFormula::And(a, b) if *b == ModalFormula::Top => *a,
        other => other,
    }
}

/// The proof search written inside the logic: `A_π` holds iff `(o, π)` is the
/// first pair in outcome-then-policy order with `□(A_π → E_o)`, else `π` is
/// the first policy and no pair is provable.
pub fn make_quined_agent(env: &ModalEnvironment) -> ModalAgent {
    let mut system = ModalSystem::new();
    if env.policies.len() == 1 {
        system.define(env.policies[0].1.clone(), ModalFormula::Top);
        return ModalAgent { system };
    }
    let mut pairs = Vec::new();
    for (_, e) in &env.outcomes {
        for (k, _) in env.policies.iter().enumerate() {
            let imp = ModalFormula::implies(env.policy_formula(k), ModalFormula::atom(e.clone()));
            pairs.push((k, ModalFormula::boxed(imp)));
        }
    }
    let none_before = |i: usize| ModalFormula::conjunction(pairs[..i].iter().map(|(_, p)| ModalFormula::not(p.clone())));
    for (k, (_, atom)) in env.policies.iter().enumerate() {
        let mut cases: Vec<ModalFormula> = pairs
            .iter()
            .enumerate()
            .filter(|(_, (pk, _))| *pk == k)
            .map(|(i, (_, p))| if i == 0 { p.clone() } else { ModalFormula::and(p.clone(), none_before(i)) })
            .collect();
        if k == 0 {
            cases.push(none_before(pairs.len()));
        }
        system.define(atom.clone(), ModalFormula::disjunction(cases));
    }
    ModalAgent { system }
}

/// An agent that outputs policy `k` no matter what.
pub fn make_constant_agent(env: &ModalEnvironment, k: usize) -> ModalAgent {
    let mut system = ModalSystem::new();
    for (i, (_, atom)) in env.policies.iter().enumerate() {
        system.define(atom.clone(), if i == k { ModalFormula::Top } else { ModalFormula::Bot });
    }
    ModalAgent { system }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub outcome: Rational,
    pub policy: String,
    pub provable: bool,
    pub implication: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
    pub returned: String,
    #[serde(skip)]
    pub returned_policy: Policy,
    /// The implication proved for the returned pair.
    pub proved: Option<String>,
    pub fallback: bool,
}

/// All oracle answers a search or report needs, computed on one chain.
struct Oracle {
    ev: Evaluator,
    values: ChainValues,
    depth: Vec<usize>,
    n_pairs: usize,
    n_policies: usize,
    stable: usize,
}

impl Oracle {
    fn new(env: &ModalEnvironment, agent: &ModalAgent, check_stability: bool) -> Result<Self, ProofUdtError> {
        let system = env.system.merged(&agent.system);
        let mut queries = Vec::new();
        for (_, e) in &env.outcomes {
            for k in 0..env.policies.len() {
                queries.push(ModalFormula::implies(env.policy_formula(k), ModalFormula::atom(e.clone())));
            }
        }
        let n_pairs = queries.len();
        for k in 0..env.policies.len() {
            queries.push(ModalFormula::not(env.policy_formula(k)));
        }
        for k in 0..env.policies.len() {
            queries.push(env.policy_formula(k));
        }
        let refs: Vec<&ModalFormula> = queries.iter().collect();
        let ev = Evaluator::new(&system, &refs)?;
        let cap = ev.box_count();
        let depth: Vec<usize> = (0..queries.len()).map(|q| ev.depth(q, cap)).collect();
        let stable = ev.stable_length();
        let values = ev.run(stable + 1);
        let oracle = Oracle { ev, values, depth, n_pairs, n_policies: env.policies.len(), stable };
        if check_stability {
            for q in 0..queries.len() {
                let n = oracle.depth[q] + 1;
                if oracle.ev.holds_up_to(&oracle.values, q, n) != oracle.ev.holds_up_to(&oracle.values, q, n + 1) {
                    return Err(ProvabilityError::Unstable(n, n + 1).into());
                }
            }
        }
        Ok(oracle)
    }

    fn provable(&self, q: usize) -> bool {
        self.ev.holds_up_to(&self.values, q, self.depth[q] + 1)
    }

    fn pair(&self, o: usize, k: usize) -> bool {
        self.provable(o * self.n_policies + k)
    }

    fn refutable(&self, k: usize) -> bool {
        self.provable(self.n_pairs + k)
    }

    /// Policies true at the top (stable) world.
    fn actual(&self) -> Vec<usize> {
        (0..self.n_policies)
            .filter(|&k| self.ev.root_value(&self.values, self.n_pairs + self.n_policies + k, self.stable))
            .collect()
    }
}

fn search_with(env: &ModalEnvironment, oracle: &Oracle) -> SearchTrace {
    let mut steps = Vec::new();
    for (oi, (o, e)) in env.outcomes.iter().enumerate() {
        for (k, (pi, atom)) in env.policies.iter().enumerate() {
            let provable = oracle.pair(oi, k);
            let implication = format!("{atom} -> {e}");
            steps.push(TraceStep { outcome: o.clone(), policy: pi.to_string(), provable, implication: implication.clone() });
            if provable {
                return SearchTrace {
                    steps,
                    returned: pi.to_string(),
                    returned_policy: pi.clone(),
                    proved: Some(implication),
                    fallback: false,
                };
            }
        }
    }
    let first = env.policies[0].0.clone();
    SearchTrace { steps, returned: first.to_string(), returned_policy: first, proved: None, fallback: true }
}

/// Outcomes best first, policies in order; the first provable
/// `A_π → E_o` wins, else the first policy with the fallback flag.
pub fn udt_search(env: &ModalEnvironment, agent: &ModalAgent, check_stability: bool) -> Result<SearchTrace, ProofUdtError> {
    let oracle = Oracle::new(env, agent, check_stability)?;
    Ok(search_with(env, &oracle))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpuriousReport {
    /// Policies `π` with `¬A_π` provable.
    pub refutable: Vec<String>,
    /// Provable implications whose antecedent is refutable.
    pub vacuous: Vec<String>,
    pub search: SearchTrace,
    /// What the agent actually outputs at the top of the chain.
    pub actual: Option<String>,
    pub spurious: bool,
}

pub fn spurious_report(agent: &ModalAgent, env: &ModalEnvironment) -> Result<SpuriousReport, ProofUdtError> {
    let oracle = Oracle::new(env, agent, false)?;
    let search = search_with(env, &oracle);
    let refutable: Vec<usize> = (0..env.policies.len()).filter(|&k| oracle.refutable(k)).collect();
    let mut vacuous = Vec::new();
    for (oi, (_, e)) in env.outcomes.iter().enumerate() {
        for &k in &refutable {
            if oracle.pair(oi, k) {
                vacuous.push(format!("{} -> {e}", env.policies[k].1));
            }
        }
    }
    let actual = match oracle.actual().as_slice() {
        [k] => Some(env.policies[*k].0.to_string()),
        _ => None,
    };
    let spurious = actual.as_deref() != Some(search.returned.as_str());
    Ok(SpuriousReport {
        refutable: refutable.iter().map(|&k| env.policies[k].0.to_string()).collect(),
        vacuous,
        search,
        actual,
        spurious,
    })
}

/// Result of running the quined agent on a problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofRun {
    pub chosen: Policy,
    pub trace: SearchTrace,
    /// Per policy: the best outcome with a provable implication, and that implication.
    pub proved: Vec<(Policy, Option<(Rational, String)>)>,
}

pub fn solve(problem: &DecisionProblem, cap: usize, check_stability: bool) -> Result<ProofRun, ProofUdtError> {
    let env = compile_to_modal(problem, cap)?;
    let agent = make_quined_agent(&env);
    let oracle = Oracle::new(&env, &agent, check_stability)?;
    let trace = search_with(&env, &oracle);
    let proved = env
        .policies
        .iter()
        .enumerate()
        .map(|(k, (pi, atom))| {
            let best = env
                .outcomes
                .iter()
                .enumerate()
                .find(|(oi, _)| oracle.pair(*oi, k))
                .map(|(_, (o, e))| (o.clone(), format!("{atom} -> {e}")));
            (pi.clone(), best)
        })
        .collect();
    Ok(ProofRun { chosen: trace.returned_policy.clone(), trace, proved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provability::evaluate_chain;

    fn three_policy_env() -> ModalEnvironment {
        let p = |a: &str| Policy::constant("start", a);
        ModalEnvironment::direct(
            vec![3.into(), 2.into(), 1.into()],
            vec![(p("High"), 3.into()), (p("Med"), 2.into()), (p("Low"), 1.into())],
        )
    }

    #[test]
    fn atom_names() {
        assert_eq!(outcome_atom(&Rational::from(-100_000_000)), "E_neg100000000");
        assert_eq!(outcome_atom(&Rational::new(8, 5)), "E_8_5");
        assert_eq!(outcome_atom(&Rational::zero()), "E_0");
        let p = Policy::new(vec![("a".into(), "Pay".into()), ("b".into(), "Refuse".into())]);
        assert_eq!(policy_atom(&p), "A_Pay__Refuse");
    }

    #[test]
    fn constant_low_agent_is_spurious() {
        let env = three_policy_env();
        let r = spurious_report(&make_constant_agent(&env, 2), &env).unwrap();
        assert_eq!(r.refutable, vec!["High", "Med"]);
        assert_eq!(r.search.returned, "High");
        assert_eq!(r.actual.as_deref(), Some("Low"));
        assert!(r.spurious);
    }

    #[test]
    fn quined_agent_is_consistent() {
        let env = three_policy_env();
        let r = spurious_report(&make_quined_agent(&env), &env).unwrap();
        // the agent provably takes High, so the others are refutable
        assert_eq!(r.refutable, vec!["Med", "Low"]);
        assert_eq!(r.actual.as_deref(), Some("High"));
        assert_eq!(r.search.returned, "High");
        assert!(!r.spurious);
    }

    #[test]
    fn single_policy_agent_is_trivially_true() {
        let pi = Policy::constant("start", "Only");
        let env = ModalEnvironment::direct(vec![1.into()], vec![(pi, 1.into())]);
        let agent = make_quined_agent(&env);
        assert_eq!(agent.system.get("A_Only"), Some(&ModalFormula::Top));
        let r = spurious_report(&agent, &env).unwrap();
        assert!(r.refutable.is_empty() && !r.spurious);
    }

    #[test]
    fn no_provable_pair_falls_back() {
        // E_1 is never true, so nothing is provable and the first policy wins.
        let p = |a: &str| Policy::constant("start", a);
        let mut env = ModalEnvironment::direct(vec![1.into()], vec![(p("X"), 1.into()), (p("Y"), 1.into())]);
        env.system.define("E_1", ModalFormula::Bot);
        let agent = ModalAgent { system: ModalSystem::new().with("A_X", ModalFormula::not(ModalFormula::boxed(ModalFormula::Bot))).with("A_Y", ModalFormula::boxed(ModalFormula::Bot)) };
        let t = udt_search(&env, &agent, true).unwrap();
        assert!(t.fallback);
        assert_eq!(t.returned, "X");
        assert_eq!(t.steps.len(), 2);
    }

    #[test]
    fn quined_valuation_on_copy_game() {
        let p = |a: &str| Policy::constant("start", a);
        let env = ModalEnvironment::direct(
            vec![3.into(), 2.into(), 1.into(), 0.into()],
            vec![(p("C"), 2.into()), (p("D"), 1.into())],
        );
        let agent = make_quined_agent(&env);
        let chain = evaluate_chain(&env.system.merged(&agent.system), 4).unwrap();
        assert_eq!(chain.valuation["A_C"], vec![true, false, true, true]);
        assert_eq!(chain.valuation["A_D"], vec![false, true, false, false]);
    }
}
