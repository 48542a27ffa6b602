use crate::rational::{q, Rational};
use crate::worldmodel::{enumerate_maps, DecisionProblem, GraphBuilder, POLICY_SEPARATOR};

use super::BuiltinId;

const M: i64 = 1_000_000;

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn r(n: i64) -> Rational {
    Rational::from(n)
}

/// Policy ids for the given observations and actions.
fn policy_ids(observations: &[&str], actions: &[&str]) -> Vec<String> {
    enumerate_maps(&strings(observations), &strings(actions), usize::MAX)
        .expect("small policy space")
        .iter()
        .map(|p| p.id())
        .collect()
}

/// The action a policy id prescribes at observation index `k`.
fn action_at(policy_id: &str, k: usize) -> &str {
    policy_id.split(POLICY_SEPARATOR).nth(k).expect("policy id covers every observation")
}

#[allow(clippy::too_many_arguments)]
fn problem(
    name: &str,
    graph: crate::worldmodel::WorldGraph,
    actions: &[&str],
    observations: &[&str],
    decision: &str,
    outcomes: Vec<Rational>,
    stage: i64,
    deterministic: bool,
) -> DecisionProblem {
    DecisionProblem::new(name, graph, strings(actions), strings(observations), decision, outcomes, stage, deterministic, Vec::new())
        .unwrap_or_else(|e| panic!("builtin `{name}` is invalid: {e}"))
}

pub(super) fn build(id: BuiltinId) -> DecisionProblem {
    match id {
        BuiltinId::EvidentialBlackmail => evidential_blackmail(),
        BuiltinId::CounterfactualBlackmail => counterfactual_blackmail(),
        BuiltinId::RetroBlackmail => retro_blackmail(),
        BuiltinId::CopyPd => copy_pd(),
        BuiltinId::NoisyPd80 => noisy_pd(
            "noisy-pd-80",
            "X",
            ("match", "flip"),
            q(4, 5),
            "Opponent runs the agent's algorithm but its output is flipped 1/5 of the time.",
        ),
        BuiltinId::ProgrammerPd90 => noisy_pd(
            "programmer-pd-90",
            "Accuracy",
            ("right", "wrong"),
            q(9, 10),
            "The programmers cooperate iff they predict cooperation, and predict right 9/10 of the time.",
        ),
        BuiltinId::SelfmodCopyPd => selfmod_copy_pd(),
        BuiltinId::Game0To10 => game_0_10(),
        BuiltinId::Newcomb => newcomb(),
    }
}

/// A scandal (1/250) is either brewing or not; the blackmailer asks for
/// payment only when they expect the agent to pay exactly in the world
/// where paying makes sense to them.
fn evidential_blackmail() -> DecisionProblem {
    let obs = ["message", "no_message"];
    let acts = ["Pay", "Refuse"];
    let ids = policy_ids(&obs, &acts);
    let graph = GraphBuilder::new()
        .chance("S", &["scandal", "quiet"], &[], |_| vec![("scandal", q(1, 250)), ("quiet", q(249, 250))])
        .algorithm("Alg", &ids)
        .det("R", &obs, &["S", "Alg"], |v| {
            let on_message = action_at(v[1], 0);
            let sent = match v[0] {
                "quiet" => on_message == "Pay",
                _ => on_message == "Refuse",
            };
            if sent { "message" } else { "no_message" }.to_string()
        })
        .decision("P", "agent", &acts, &["Alg", "R"])
        .utility("U", &["S", "P"], |v| match (v[0], v[1]) {
            ("scandal", "Pay") => r(-250 * M),
            ("scandal", _) => r(-150 * M),
            (_, "Pay") => r(-100 * M),
            _ => r(0),
        })
        .build()
        .expect("valid graph");
    problem(
        "evidential-blackmail",
        graph,
        &acts,
        &obs,
        "P",
        vec![r(0), r(-100 * M), r(-150 * M), r(-250 * M)],
        0,
        false,
    )
    .with_note("P(scandal) = 1/250; paying costs 100M, the scandal 150M.")
}

fn blackmail_utility(v: &[&str]) -> Rational {
    match (v[0], v[1]) {
        ("deployed", "Pay") => r(-100 * M),
        ("deployed", _) => r(-150 * M),
        _ => r(0),
    }
}

/// The researcher deploys iff the agent's policy pays once deployed. The
/// prediction feeds deployment deterministically.
fn counterfactual_blackmail() -> DecisionProblem {
    let obs = ["deployed", "not_deployed"];
    let acts = ["Pay", "Refuse"];
    let ids = policy_ids(&obs, &acts);
    let graph = GraphBuilder::new()
        .algorithm("Alg", &ids)
        .det("V", &obs, &["Alg"], |v| if action_at(v[0], 0) == "Pay" { "deployed" } else { "not_deployed" }.to_string())
        .at_stage(1)
        .decision("P", "agent", &acts, &["Alg", "V"])
        .utility("U", &["V", "P"], blackmail_utility)
        .build()
        .expect("valid graph");
    problem("counterfactual-blackmail", graph, &acts, &obs, "P", vec![r(0), r(-100 * M), r(-150 * M)], 1, true)
        .with_note("The researcher's prediction decides deployment with certainty.")
}

/// Like counterfactual blackmail, but the researcher simulates the agent's
/// original source, which predates the point where the agent chooses.
fn retro_blackmail() -> DecisionProblem {
    let acts = ["Pay", "Refuse"];
    let graph = GraphBuilder::new()
        .algorithm("Alg", &strings(&acts))
        .det("V", &["deployed", "not_deployed"], &["Alg"], |v| {
            if v[0] == "Pay" { "deployed" } else { "not_deployed" }.to_string()
        })
        .at_stage(0)
        .decision("P", "agent", &acts, &["Alg"])
        .utility("U", &["V", "P"], blackmail_utility)
        .build()
        .expect("valid graph");
    problem("retro-blackmail", graph, &acts, &["blackmailed"], "P", vec![r(0), r(-100 * M), r(-150 * M)], 1, true)
        .with_note("The researcher reads the original source at stage 0; the agent chooses at stage 1.")
}

fn pd_payoff(me: &str, them: &str) -> Rational {
    match (me, them) {
        ("Cooperate", "Cooperate") => r(2),
        ("Cooperate", _) => r(0),
        ("Defect", "Cooperate") => r(3),
        _ => r(1),
    }
}

const PD: [&str; 2] = ["Cooperate", "Defect"];

fn other(a: &str) -> &'static str {
    if a == "Cooperate" {
        "Defect"
    } else {
        "Cooperate"
    }
}

fn copy_pd() -> DecisionProblem {
    let graph = GraphBuilder::new()
        .algorithm("Alg", &strings(&PD))
        .det("O", &PD, &["Alg"], |v| v[0].to_string())
        .at_stage(0)
        .decision("A", "agent", &PD, &["Alg"])
        .utility("U", &["A", "O"], |v| pd_payoff(v[0], v[1]))
        .build()
        .expect("valid graph");
    problem("copy-pd", graph, &PD, &["start"], "A", vec![r(3), r(2), r(1), r(0)], 1, true)
        .with_note("The opponent is a perfect copy of the agent.")
}

fn noisy_pd(name: &str, noise: &str, labels: (&'static str, &'static str), p: Rational, note: &str) -> DecisionProblem {
    let rest = Rational::one() - &p;
    let (same, flip) = labels;
    let graph = GraphBuilder::new()
        .algorithm("Alg", &strings(&PD))
        .chance(noise, &[same, flip], &[], move |_| vec![(same, p.clone()), (flip, rest.clone())])
        .det("O", &PD, &["Alg", noise], move |v| if v[1] == same { v[0].to_string() } else { other(v[0]).to_string() })
        .decision("A", "agent", &PD, &["Alg"])
        .utility("U", &["A", "O"], |v| pd_payoff(v[0], v[1]))
        .build()
        .expect("valid graph");
    problem(name, graph, &PD, &["start"], "A", vec![r(3), r(2), r(1), r(0)], 1, false).with_note(note)
}

const MODS: [&str; 3] = ["keep", "precommit_cooperate", "precommit_defect"];

fn move_after(modification: &str, later: &str) -> String {
    match (modification, later) {
        ("precommit_cooperate", _) => "Cooperate",
        ("precommit_defect", _) => "Defect",
        (_, "precommit_cooperate") => "Cooperate",
        _ => "Defect",
    }
    .to_string()
}

/// t=1 self-modification, t=2 copying, t=3 a second chance to self-modify
/// for both instances, t=4 the Prisoner's Dilemma. An unmodified agent
/// defects at t=4.
fn selfmod_copy_pd() -> DecisionProblem {
    let graph = GraphBuilder::new()
        .decision("M1", "agent", &MODS, &[])
        .at_stage(1)
        .det("Copy", &MODS, &["M1"], |v| v[0].to_string())
        .at_stage(2)
        .decision("M3", "agent", &MODS, &["M1"])
        .at_stage(3)
        .decision("M3c", "copy", &MODS, &["Copy"])
        .at_stage(3)
        .det("A4", &PD, &["M1", "M3"], |v| move_after(v[0], v[1]))
        .at_stage(4)
        .det("O4", &PD, &["Copy", "M3c"], |v| move_after(v[0], v[1]))
        .at_stage(4)
        .utility("U", &["A4", "O4"], |v| pd_payoff(v[0], v[1]))
        .build()
        .expect("valid graph");
    problem("selfmod-copy-pd", graph, &MODS, &["start"], "M1", vec![r(3), r(2), r(1), r(0)], 1, true)
        .with_note("Self-modification at t=1 and t=3 before a copy Prisoner's Dilemma at t=4.")
}

fn game_0_10() -> DecisionProblem {
    let nums: Vec<String> = (0..=10).map(|n| n.to_string()).collect();
    let refs: Vec<&str> = nums.iter().map(String::as_str).collect();
    let graph = GraphBuilder::new()
        .det("H", &["9"], &[], |_| "9".to_string())
        .decision("A", "agent", &refs, &[])
        .utility("U", &["A", "H"], |v| {
            let a: i64 = v[0].parse().expect("numeric action");
            let h: i64 = v[1].parse().expect("numeric action");
            if a + h <= 10 {
                r(a)
            } else {
                r(0)
            }
        })
        .build()
        .expect("valid graph");
    problem("game-0-10", graph, &refs, &["start"], "A", vec![r(1), r(0)], 0, true)
        .with_note("The human writes 9; the agent is paid its number if the sum is at most 10.")
}

/// Standard Newcomb with a perfect predictor reading the agent's algorithm.
fn newcomb() -> DecisionProblem {
    let acts = ["onebox", "twobox"];
    let graph = GraphBuilder::new()
        .algorithm("Alg", &strings(&acts))
        .det("B", &["full", "empty"], &["Alg"], |v| if v[0] == "onebox" { "full" } else { "empty" }.to_string())
        .at_stage(0)
        .decision("D", "agent", &acts, &["Alg"])
        .utility("U", &["D", "B"], |v| match (v[0], v[1]) {
            ("onebox", "full") => r(M),
            ("onebox", _) => r(0),
            (_, "full") => r(M + 1000),
            _ => r(1000),
        })
        .build()
        .expect("valid graph");
    problem("newcomb", graph, &acts, &["start"], "D", vec![r(M + 1000), r(M), r(1000), r(0)], 1, true)
        .with_note("non-paper: standard $1M/$1k boxes with a perfect predictor.")
}

/// Prisoner's Dilemma against a copy that plays the agent's move with
/// probability `p` and the other move otherwise.
pub fn noisy_copy_pd(p: Rational) -> DecisionProblem {
    let note = format!("The copy matches the agent's move with probability {p}.");
    noisy_pd("noisy-pd", "X", ("match", "flip"), p, &note)
}

/// One-shot Prisoner's Dilemma against an opponent who cooperates with
/// probability `p`, independent of the agent.
pub fn causal_pd(p: Rational) -> DecisionProblem {
    let rest = Rational::one() - &p;
    let graph = GraphBuilder::new()
        .chance("O", &PD, &[], move |_| vec![("Cooperate", p.clone()), ("Defect", rest.clone())])
        .decision("A", "agent", &PD, &[])
        .utility("U", &["A", "O"], |v| pd_payoff(v[0], v[1]))
        .build()
        .expect("valid graph");
    problem("causal-pd", graph, &PD, &["start"], "A", vec![r(3), r(2), r(1), r(0)], 0, false)
}

/// An agent about to be retro-blackmailed can accept an anti-blackmail
/// patch or pay `price` to avoid it. Its original-source copy avoids the
/// patch with probability `avoid`; the researcher deploys iff that copy
/// stays unpatched.
pub fn retro_patch_scenario(avoid: Rational, price: Rational) -> DecisionProblem {
    let stay = Rational::one() - &avoid;
    let deterministic = avoid.is_zero() || avoid.is_one();
    let cost = price.clone();
    let graph = GraphBuilder::new()
        .chance("Original", &["avoids_patch", "accepts_patch"], &[], move |_| {
            vec![("avoids_patch", avoid.clone()), ("accepts_patch", stay.clone())]
        })
        .at_stage(0)
        .det("V", &["deployed", "not_deployed"], &["Original"], |v| {
            if v[0] == "avoids_patch" { "deployed" } else { "not_deployed" }.to_string()
        })
        .decision("M", "agent", &["accept_patch", "pay_to_avoid"], &[])
        .at_stage(1)
        .utility("U", &["V", "M"], move |v| match (v[0], v[1]) {
            ("deployed", "accept_patch") => r(-150 * M),
            ("deployed", _) => r(-100 * M) - &cost,
            (_, "accept_patch") => r(0),
            _ => -cost.clone(),
        })
        .build()
        .expect("valid graph");
    let mut outcomes = vec![r(0), -price.clone(), r(-100 * M) - &price, r(-150 * M)];
    outcomes.sort_by(|a, b| b.cmp(a));
    outcomes.dedup();
    problem(
        "retro-patch",
        graph,
        &["accept_patch", "pay_to_avoid"],
        &["start"],
        "M",
        outcomes,
        1,
        deterministic,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for id in BuiltinId::ALL {
            let p = build(id);
            assert_eq!(p.name, id.name());
        }
    }

    #[test]
    fn policy_ids_decode() {
        let ids = policy_ids(&["m", "n"], &["Pay", "Refuse"]);
        assert_eq!(ids, vec!["Pay.Pay", "Pay.Refuse", "Refuse.Pay", "Refuse.Refuse"]);
        assert_eq!(action_at("Pay.Refuse", 1), "Refuse");
    }
}
