use std::collections::{BTreeMap, HashMap};

use super::{ModalFormula, ModalSystem, ProvabilityError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Bot,
    Top,
    Atom(u32),
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
    Implies(u32, u32),
    Box(u32),
}

/// A system plus query formulas compiled to a shared DAG.
///
/// Each `□` node's truth value can only fall from true to false as worlds
/// increase, and once no `□` node changes the whole valuation is fixed. So
/// `box_count() + 1` worlds always reach the stable part of the chain.
#[derive(Debug, Clone)]
pub struct Evaluator {
    ops: Vec<Op>,
    interned: HashMap<Op, u32>,
    atom_names: Vec<String>,
    atom_index: HashMap<String, u32>,
    atom_roots: Vec<u32>,
    roots: Vec<u32>,
    order: Vec<u32>,
    boxes: Vec<u32>,
}

/// Truth values of every DAG node at worlds `0..len`.
#[derive(Debug, Clone)]
pub struct ChainValues {
    worlds: Vec<Vec<bool>>,
}

impl ChainValues {
    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }
}

impl Evaluator {
    pub fn new(system: &ModalSystem, formulas: &[&ModalFormula]) -> Result<Self, ProvabilityError> {
        let mut ev = Evaluator {
            ops: Vec::new(),
            interned: HashMap::new(),
            atom_names: Vec::new(),
            atom_index: HashMap::new(),
            atom_roots: Vec::new(),
            roots: Vec::new(),
            order: Vec::new(),
            boxes: Vec::new(),
        };
        for f in formulas {
            let r = ev.intern(f);
            ev.roots.push(r);
        }
        // definitions of atoms discovered along the way, in discovery order
        let mut k = 0;
        while k < ev.atom_names.len() {
            let name = ev.atom_names[k].clone();
            let def = system.get(&name).ok_or_else(|| ProvabilityError::UndefinedAtom(name.clone()))?;
            let r = ev.intern(def);
            ev.atom_roots.push(r);
            k += 1;
        }
        ev.order = ev.same_world_order()?;
        ev.boxes = (0..ev.ops.len() as u32).filter(|&i| matches!(ev.ops[i as usize], Op::Box(_))).collect();
        Ok(ev)
    }

    fn push(&mut self, op: Op) -> u32 {
        if let Some(&i) = self.interned.get(&op) {
            return i;
        }
        let i = self.ops.len() as u32;
        self.ops.push(op);
        self.interned.insert(op, i);
        i
    }

    fn intern(&mut self, f: &ModalFormula) -> u32 {
        let op = match f {
            ModalFormula::Bot => Op::Bot,
            ModalFormula::Top => Op::Top,
            ModalFormula::Atom(a) => {
                let k = match self.atom_index.get(a) {
                    Some(&k) => k,
                    None => {
                        let k = self.atom_names.len() as u32;
                        self.atom_names.push(a.clone());
                        self.atom_index.insert(a.clone(), k);
                        k
                    }
                };
                Op::Atom(k)
            }
            ModalFormula::Not(a) => Op::Not(self.intern(a)),
            ModalFormula::Box(a) => Op::Box(self.intern(a)),
            ModalFormula::And(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                Op::And(a, b)
            }
            ModalFormula::Or(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                Op::Or(a, b)
            }
            ModalFormula::Implies(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                Op::Implies(a, b)
            }
        };
        self.push(op)
    }

    fn same_world_deps(&self, i: u32) -> Vec<u32> {
        match self.ops[i as usize] {
            Op::Bot | Op::Top | Op::Box(_) => vec![],
            Op::Atom(k) => vec![self.atom_roots[k as usize]],
            Op::Not(a) => vec![a],
            Op::And(a, b) | Op::Or(a, b) | Op::Implies(a, b) => vec![a, b],
        }
    }

    /// Dependencies first; a cycle not cut by `□` is an unguarded definition.
    fn same_world_order(&self) -> Result<Vec<u32>, ProvabilityError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let n = self.ops.len();
        let mut mark = vec![Mark::New; n];
        let mut order = Vec::with_capacity(n);
        for start in 0..n as u32 {
            if mark[start as usize] != Mark::New {
                continue;
            }
            let mut stack: Vec<(u32, usize)> = vec![(start, 0)];
            mark[start as usize] = Mark::Open;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                let deps = self.same_world_deps(node);
                if *next < deps.len() {
                    let d = deps[*next];
                    *next += 1;
                    match mark[d as usize] {
                        Mark::New => {
                            mark[d as usize] = Mark::Open;
                            stack.push((d, 0));
                        }
                        Mark::Open => {
                            let cycle_atom = stack
                                .iter()
                                .map(|(x, _)| *x)
                                .chain(std::iter::once(d))
                                .find_map(|x| match self.ops[x as usize] {
                                    Op::Atom(k) => Some(self.atom_names[k as usize].clone()),
                                    _ => None,
                                })
                                .unwrap_or_default();
                            return Err(ProvabilityError::UnguardedCycle(cycle_atom));
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[node as usize] = Mark::Done;
                    order.push(node);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    /// Number of distinct `□` subterms.
    pub fn box_count(&self) -> usize {
        self.boxes.len()
    }

    /// Chain length that is guaranteed to reach the stable part.
    pub fn stable_length(&self) -> usize {
        self.box_count() + 1
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    /// `□`-depth of query `root` with atoms expanded, saturating at `cap`.
    pub fn depth(&self, root: usize, cap: usize) -> usize {
        self.depths(cap)[self.roots[root] as usize]
    }

    fn depths(&self, cap: usize) -> Vec<usize> {
        let mut d = vec![0usize; self.ops.len()];
        loop {
            let mut changed = false;
            for &i in &self.order {
                let v = match self.ops[i as usize] {
                    Op::Bot | Op::Top => 0,
                    Op::Atom(k) => d[self.atom_roots[k as usize] as usize],
                    Op::Not(a) => d[a as usize],
                    Op::And(a, b) | Op::Or(a, b) | Op::Implies(a, b) => d[a as usize].max(d[b as usize]),
                    Op::Box(a) => (d[a as usize] + 1).min(cap),
                };
                if v > d[i as usize] {
                    d[i as usize] = v;
                    changed = true;
                }
            }
            // box children are not ordered before their box, so sweep again
            if !changed {
                return d;
            }
        }
    }

    pub fn run(&self, worlds: usize) -> ChainValues {
        let n = self.ops.len();
        let mut below = vec![true; n];
        let mut out = Vec::with_capacity(worlds);
        for _ in 0..worlds {
            let mut v = vec![false; n];
            for &i in &self.order {
                v[i as usize] = match self.ops[i as usize] {
                    Op::Bot => false,
                    Op::Top => true,
                    Op::Atom(k) => v[self.atom_roots[k as usize] as usize],
                    Op::Not(a) => !v[a as usize],
                    Op::And(a, b) => v[a as usize] && v[b as usize],
                    Op::Or(a, b) => v[a as usize] || v[b as usize],
                    Op::Implies(a, b) => !v[a as usize] || v[b as usize],
                    Op::Box(a) => below[a as usize],
                };
            }
            for &b in &self.boxes {
                if let Op::Box(a) = self.ops[b as usize] {
                    below[a as usize] &= v[a as usize];
                }
            }
            out.push(v);
        }
        ChainValues { worlds: out }
    }

    pub fn root_value(&self, values: &ChainValues, root: usize, world: usize) -> bool {
        values.worlds[world][self.roots[root] as usize]
    }

    /// True at every computed world.
    pub fn holds_everywhere(&self, values: &ChainValues, root: usize) -> bool {
        values.worlds.iter().all(|w| w[self.roots[root] as usize])
    }

    /// True at worlds `0..worlds`.
    pub fn holds_up_to(&self, values: &ChainValues, root: usize, worlds: usize) -> bool {
        values.worlds.iter().take(worlds).all(|w| w[self.roots[root] as usize])
    }

    pub fn atom_value(&self, values: &ChainValues, atom: &str, world: usize) -> Option<bool> {
        let k = *self.atom_index.get(atom)?;
        Some(values.worlds[world][self.atom_roots[k as usize] as usize])
    }
}

/// Valuation of every defined atom on worlds `0..length`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeChain {
    pub length: usize,
    pub valuation: BTreeMap<String, Vec<bool>>,
}

impl KripkeChain {
    pub fn value(&self, atom: &str, world: usize) -> Option<bool> {
        self.valuation.get(atom).and_then(|v| v.get(world).copied())
    }
}

pub fn evaluate_chain(system: &ModalSystem, length: usize) -> Result<KripkeChain, ProvabilityError> {
    let atoms: Vec<ModalFormula> = system.atoms().map(|a| ModalFormula::atom(a.clone())).collect();
    let refs: Vec<&ModalFormula> = atoms.iter().collect();
    let ev = Evaluator::new(system, &refs)?;
    let values = ev.run(length);
    let valuation = system
        .atoms()
        .map(|a| {
            let v = (0..length).map(|w| ev.atom_value(&values, a, w).expect("compiled atom")).collect();
            (a.clone(), v)
        })
        .collect();
    Ok(KripkeChain { length, valuation })
}

/// `□`-depth after expanding atoms, saturating at `cap` for guarded cycles.
pub fn modal_depth_capped(f: &ModalFormula, system: &ModalSystem, cap: usize) -> Result<usize, ProvabilityError> {
    Ok(Evaluator::new(system, &[f])?.depth(0, cap))
}

/// `□`-depth after expanding atoms. Guarded cycles saturate at the number of
/// distinct `□` subterms, which is where the chain stops changing.
pub fn modal_depth(f: &ModalFormula, system: &ModalSystem) -> Result<usize, ProvabilityError> {
    let ev = Evaluator::new(system, &[f])?;
    Ok(ev.depth(0, ev.box_count()))
}

pub fn is_provable_at(f: &ModalFormula, system: &ModalSystem, length: usize) -> Result<bool, ProvabilityError> {
    let ev = Evaluator::new(system, &[f])?;
    Ok(ev.holds_everywhere(&ev.run(length), 0))
}

/// Provable iff true at every world of a chain of length `modal_depth + 1`.
pub fn is_provable(f: &ModalFormula, system: &ModalSystem) -> Result<bool, ProvabilityError> {
    let ev = Evaluator::new(system, &[f])?;
    let n = ev.depth(0, ev.box_count()) + 1;
    Ok(ev.holds_everywhere(&ev.run(n), 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ModalFormula as F;

    fn bx(f: F) -> F {
        F::boxed(f)
    }

    #[test]
    fn depths() {
        let s = ModalSystem::new();
        assert_eq!(modal_depth(&F::Bot, &s).unwrap(), 0);
        assert_eq!(modal_depth(&bx(bx(F::Bot)), &s).unwrap(), 2);
        let liar = ModalSystem::new().with("a", F::not(bx(F::atom("a"))));
        assert_eq!(modal_depth_capped(&F::atom("a"), &liar, 7).unwrap(), 7);
    }

    #[test]
    fn consistency_is_false_only_at_the_bottom() {
        let ev = Evaluator::new(&ModalSystem::new(), &[&F::not(bx(F::Bot))]).unwrap();
        let v = ev.run(4);
        let vals: Vec<bool> = (0..4).map(|w| ev.root_value(&v, 0, w)).collect();
        assert_eq!(vals, vec![false, true, true, true]);
        assert!(!is_provable(&F::not(bx(F::Bot)), &ModalSystem::new()).unwrap());
    }

    #[test]
    fn self_trust_holds_everywhere() {
        let sys = ModalSystem::new().with("a", bx(F::atom("a")));
        let chain = evaluate_chain(&sys, 5).unwrap();
        assert_eq!(chain.valuation["a"], vec![true; 5]);
    }

    #[test]
    fn liar_like_sentence_is_false_then_true() {
        // a := ¬□a. At world 0 □a is vacuously true, so a is false there;
        // from world 1 on, □a sees world 0 and fails, so a is true.
        let sys = ModalSystem::new().with("a", F::not(bx(F::atom("a"))));
        let chain = evaluate_chain(&sys, 4).unwrap();
        assert_eq!(chain.valuation["a"], vec![false, true, true, true]);
    }

    #[test]
    fn unguarded_cycle_is_rejected() {
        let sys = ModalSystem::new().with("a", F::not(F::atom("b"))).with("b", F::atom("a"));
        assert!(matches!(evaluate_chain(&sys, 2), Err(ProvabilityError::UnguardedCycle(_))));
    }

    #[test]
    fn axiom_instances() {
        let s = ModalSystem::new();
        assert!(is_provable(&F::lob(F::Bot), &s).unwrap());
        let f = F::atom("f");
        let sys = ModalSystem::new().with("f", F::not(bx(F::not(bx(F::Bot)))));
        assert!(is_provable(&F::implies(bx(F::Bot), bx(f)), &sys).unwrap());
        assert!(is_provable(&F::implies(bx(F::Bot), bx(bx(F::Bot))), &s).unwrap());
    }
}
