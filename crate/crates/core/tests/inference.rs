mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use common::{brute_eu, brute_joint, random_graph, Assignment};
use dtlab::inference::{
    algorithm_intervention, condition, do_intervention, expected_utility, joint_distribution, Bindings, Event,
    InferenceError,
};
use dtlab::problems::{builtin, causal_pd, BuiltinId};
use dtlab::theories::prior_bindings;
use dtlab::worldmodel::{
    enumerate_policies, topological_order, ChanceRow, GraphBuilder, ModelError, Node, NodeId, NodeKind, Policy, PredictorMode,
    WorldGraph,
};
use dtlab::{q, Rational};

fn nonzero(d: &dtlab::inference::Distribution) -> BTreeMap<Assignment, Rational> {
    d.assignments().into_iter().filter(|(_, p)| !p.is_zero()).collect()
}

fn oracle(joint: Vec<(Assignment, Rational)>) -> BTreeMap<Assignment, Rational> {
    joint.into_iter().collect()
}

fn roots(g: &WorldGraph) -> Vec<String> {
    g.nodes()
        .iter()
        .filter(|n| n.parents.is_empty() && matches!(n.kind, NodeKind::Chance { .. }))
        .map(|n| n.id.to_string())
        .collect()
}

#[test]
fn evidential_blackmail_marginals() {
    let p = builtin(BuiltinId::EvidentialBlackmail);
    let joint = joint_distribution(&p.graph, &prior_bindings(&p)).unwrap();
    assert_eq!(joint.marginal_of("S", "scandal").unwrap(), q(1, 250));
    let paid = condition(&joint, &Event::is("R", "message").and(&Event::is("P", "Pay"))).unwrap();
    assert_eq!(paid.marginal_of("S", "scandal").unwrap(), Rational::zero());
    let g = do_intervention(&p.graph, "P", "Pay").unwrap();
    let after = joint_distribution(&g, &prior_bindings(&p)).unwrap();
    assert_eq!(after.marginal_of("S", "scandal").unwrap(), q(1, 250));
    let order: Vec<String> = topological_order(&p.graph).unwrap().iter().map(|n| n.to_string()).collect();
    let at = |x: &str| order.iter().position(|n| n == x).unwrap();
    assert!(at("S") < at("R") && at("Alg") < at("R") && at("R") < at("P") && at("P") < at("U"));
}

#[test]
fn deterministic_refuser_cannot_be_conditioned_on_paying() {
    let mut p = builtin(BuiltinId::RetroBlackmail);
    p.prior = vec![("Pay".into(), Rational::zero()), ("Refuse".into(), Rational::one())];
    let joint = joint_distribution(&p.graph, &prior_bindings(&p)).unwrap();
    assert_eq!(joint.len(), 1);
    assert!(matches!(condition(&joint, &Event::is("P", "Pay")), Err(InferenceError::ZeroProbabilityEvent(_))));
    let same = condition(&joint, &Event::always()).unwrap();
    assert_eq!(same, joint);
}

#[test]
fn logical_graphs_propagate_the_algorithm() {
    let p = builtin(BuiltinId::CopyPd);
    let alg = p.algorithm_node().unwrap().id.clone();
    let pi = p.policy_from_actions(&["Cooperate"]).unwrap();
    let g = algorithm_intervention(&p.graph, alg.as_str(), &pi).unwrap();
    let joint = joint_distribution(&g, &Bindings::new()).unwrap();
    assert_eq!(joint.marginal_of("A", "Cooperate").unwrap(), Rational::one());
    assert_eq!(joint.marginal_of("O", "Cooperate").unwrap(), Rational::one());
    assert_eq!(expected_utility(&joint, &g).unwrap(), Rational::from(2));
    let pd = p.policy_from_actions(&["Defect"]).unwrap();
    let g = algorithm_intervention(&p.graph, alg.as_str(), &pd).unwrap();
    assert_eq!(expected_utility(&joint_distribution(&g, &Bindings::new()).unwrap(), &g).unwrap(), Rational::one());

    let noisy = builtin(BuiltinId::NoisyPd80);
    let g = algorithm_intervention(&noisy.graph, "Alg", &pi).unwrap();
    let joint = joint_distribution(&g, &Bindings::new()).unwrap();
    assert_eq!(joint.marginal_of("O", "Cooperate").unwrap(), q(4, 5));
    assert_eq!(expected_utility(&joint, &g).unwrap(), q(8, 5));
}

#[test]
fn intervening_on_an_isolated_algorithm_changes_only_it() {
    let mut b = GraphBuilder::new();
    b.chance("C", &["h", "t"], &[], |_| vec![("h", q(1, 2)), ("t", q(1, 2))])
        .algorithm("Alg", &["x".to_string(), "y".to_string()])
        .utility("U", &["C"], |v| if v[0] == "h" { Rational::one() } else { Rational::zero() });
    let g = b.build().unwrap();
    let before = joint_distribution(&g, &BTreeMap::from([("Alg".into(), dtlab::inference::Binding::Value("x".into()))])).unwrap();
    let pinned = algorithm_intervention(&g, "Alg", &Policy::constant("o", "y")).unwrap();
    let after = joint_distribution(&pinned, &Bindings::new()).unwrap();
    assert_eq!(before.marginal("C").unwrap(), after.marginal("C").unwrap());
    assert_eq!(after.marginal_of("Alg", "y").unwrap(), Rational::one());
}

#[test]
fn self_loops_and_unnormalized_rows_are_rejected() {
    let looped = Node {
        id: NodeId::new("A"),
        values: vec!["x".into()],
        parents: vec![NodeId::new("A")],
        kind: NodeKind::Chance { rows: vec![ChanceRow { parents: vec!["x".into()], dist: vec![("x".into(), Rational::one())] }] },
        stage: None,
        predictor: PredictorMode::Direct,
    };
    assert!(matches!(WorldGraph::new(vec![looped]), Err(ModelError::CycleDetected(_))));
    let mut b = GraphBuilder::new();
    b.chance("A", &["x", "y"], &[], |_| vec![("x", q(1, 2)), ("y", q(2, 5))]).utility("U", &["A"], |_| Rational::zero());
    assert!(matches!(b.build(), Err(ModelError::NonNormalizedCpt { .. })));
}

#[test]
fn counterfactual_blackmail_has_four_policies() {
    let p = builtin(BuiltinId::CounterfactualBlackmail);
    let ids: Vec<String> = enumerate_policies(&p, 100).unwrap().iter().map(Policy::id).collect();
    assert_eq!(ids, ["Pay.Pay", "Pay.Refuse", "Refuse.Pay", "Refuse.Refuse"]);
}

#[test]
fn causal_pd_dominance_for_every_tenth() {
    for k in 0..=10 {
        let p = causal_pd(q(k, 10));
        let graph_c = do_intervention(&p.graph, "A", "Cooperate").unwrap();
        let graph_d = do_intervention(&p.graph, "A", "Defect").unwrap();
        let jc = joint_distribution(&graph_c, &Bindings::new()).unwrap();
        let jd = joint_distribution(&graph_d, &Bindings::new()).unwrap();
        assert_eq!(jc.marginal_of("O", "Cooperate").unwrap(), q(k, 10));
        let diff = expected_utility(&jd, &graph_d).unwrap() - expected_utility(&jc, &graph_c).unwrap();
        assert_eq!(diff, Rational::one());
        assert_eq!(expected_utility(&jc, &graph_c).unwrap(), q(2 * k, 10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_matches_brute_force_and_sums_to_one(seed in any::<u64>()) {
        let g = random_graph(seed);
        let d = joint_distribution(&g, &Bindings::new()).unwrap();
        prop_assert!(d.total_mass().is_one());
        let brute = brute_joint(&g, &Assignment::new(), &Assignment::new());
        prop_assert_eq!(nonzero(&d), oracle(brute.clone()));
        prop_assert_eq!(expected_utility(&d, &g).unwrap(), brute_eu(&brute, &g));
    }

    #[test]
    fn root_do_equals_condition(seed in any::<u64>()) {
        let g = random_graph(seed);
        let d = joint_distribution(&g, &Bindings::new()).unwrap();
        for root in roots(&g) {
            for (value, mass) in d.marginal(&root).unwrap() {
                if mass.is_zero() {
                    continue;
                }
                let cut = do_intervention(&g, &root, &value).unwrap();
                let done = joint_distribution(&cut, &Bindings::new()).unwrap();
                let conditioned = condition(&d, &Event::is(root.as_str(), value.as_str())).unwrap();
                prop_assert_eq!(nonzero(&done), nonzero(&conditioned));
                let forced = Assignment::from([(root.clone(), value.clone())]);
                prop_assert_eq!(nonzero(&done), oracle(brute_joint(&g, &Assignment::new(), &forced)));
            }
        }
    }

    #[test]
    fn conditioning_composes(seed in any::<u64>(), pick in any::<(usize, usize, usize, usize)>()) {
        let g = random_graph(seed);
        let d = joint_distribution(&g, &Bindings::new()).unwrap();
        let nodes: Vec<_> = g.nodes().iter().filter(|n| !n.is_utility()).collect();
        let n1 = nodes[pick.0 % nodes.len()];
        let n2 = nodes[pick.2 % nodes.len()];
        let e1 = Event::is(n1.id.clone(), n1.values[pick.1 % n1.values.len()].clone());
        let e2 = Event::is(n2.id.clone(), n2.values[pick.3 % n2.values.len()].clone());
        if let (Ok(a), Ok(both)) = (condition(&d, &e1), condition(&d, &e1.and(&e2))) {
            let twice = condition(&a, &e2).unwrap();
            prop_assert_eq!(nonzero(&twice), nonzero(&both));
            prop_assert!(twice.total_mass().is_one());
        }
    }

    #[test]
    fn topological_order_puts_parents_first(seed in any::<u64>()) {
        let g = random_graph(seed);
        let order = topological_order(&g).unwrap();
        let names: BTreeSet<_> = order.iter().cloned().collect();
        prop_assert_eq!(names.len(), g.nodes().len());
        for n in g.nodes() {
            let at = order.iter().position(|x| *x == n.id).unwrap();
            for p in &n.parents {
                prop_assert!(order.iter().position(|x| x == p).unwrap() < at);
            }
        }
    }

    #[test]
    fn policy_spaces_have_the_expected_size(obs in 1usize..4, acts in 1usize..4) {
        let o: Vec<String> = (0..obs).map(|i| format!("o{i}")).collect();
        let a: Vec<String> = (0..acts).map(|i| format!("a{i}")).collect();
        let all = dtlab::worldmodel::enumerate_maps(&o, &a, 1000).unwrap();
        prop_assert_eq!(all.len(), acts.pow(obs as u32));
        let distinct: BTreeSet<String> = all.iter().map(Policy::id).collect();
        prop_assert_eq!(distinct.len(), all.len());
        prop_assert!(all.iter().all(|p| o.iter().all(|x| p.action_for(x).is_some())));
    }
}

#[test]
fn builtin_joints_are_normalized() {
    for id in BuiltinId::ALL {
        let p = builtin(id);
        let d = joint_distribution(&p.graph, &prior_bindings(&p)).unwrap();
        assert!(d.total_mass().is_one(), "{id}");
    }
}
