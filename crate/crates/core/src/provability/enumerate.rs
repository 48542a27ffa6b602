//! Hilbert-style proof search for letterless GL sentences.
//!
//! Axioms are propositional tautologies (boxed subformulas read as
//! variables), distribution `□(A→B) → (□A → □B)` and Löb `□(□A→A) → □A`,
//! with `A`, `B` drawn from the target's subformulas and their boxes.
//! Rules are modus ponens, necessitation and tautological consequence from
//! at most two theorems. Search proceeds in rounds over a fixed finite
//! universe of formulas, so a failure to find a proof never means the
//! sentence is unprovable.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{ModalFormula, ModalSystem, ProvabilityError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum T {
    Bot,
    Top,
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
    Imp(u32, u32),
    Box(u32),
}

#[derive(Default)]
struct Arena {
    ts: Vec<T>,
    map: HashMap<T, u32>,
}

impl Arena {
    fn add(&mut self, t: T) -> u32 {
        if let Some(&i) = self.map.get(&t) {
            return i;
        }
        let i = self.ts.len() as u32;
        self.ts.push(t);
        self.map.insert(t, i);
        i
    }

    fn find(&self, t: T) -> Option<u32> {
        self.map.get(&t).copied()
    }

    fn intern(&mut self, f: &ModalFormula) -> u32 {
        let t = match f {
            ModalFormula::Bot => T::Bot,
            ModalFormula::Top => T::Top,
            ModalFormula::Atom(a) => unreachable!("expanded formula has atom {a}"),
            ModalFormula::Not(a) => T::Not(self.intern(a)),
            ModalFormula::Box(a) => T::Box(self.intern(a)),
            ModalFormula::And(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                T::And(a, b)
            }
            ModalFormula::Or(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                T::Or(a, b)
            }
            ModalFormula::Implies(a, b) => {
                let (a, b) = (self.intern(a), self.intern(b));
                T::Imp(a, b)
            }
        };
        self.add(t)
    }

    fn to_formula(&self, i: u32) -> ModalFormula {
        match self.ts[i as usize] {
            T::Bot => ModalFormula::Bot,
            T::Top => ModalFormula::Top,
            T::Not(a) => ModalFormula::not(self.to_formula(a)),
            T::Box(a) => ModalFormula::boxed(self.to_formula(a)),
            T::And(a, b) => ModalFormula::and(self.to_formula(a), self.to_formula(b)),
            T::Or(a, b) => ModalFormula::or(self.to_formula(a), self.to_formula(b)),
            T::Imp(a, b) => ModalFormula::implies(self.to_formula(a), self.to_formula(b)),
        }
    }

    fn subformulas(&self, i: u32, out: &mut Vec<u32>, seen: &mut HashSet<u32>) {
        if !seen.insert(i) {
            return;
        }
        match self.ts[i as usize] {
            T::Bot | T::Top => {}
            T::Not(a) | T::Box(a) => self.subformulas(a, out, seen),
            T::And(a, b) | T::Or(a, b) | T::Imp(a, b) => {
                self.subformulas(a, out, seen);
                self.subformulas(b, out, seen);
            }
        }
        out.push(i);
    }

    fn boxed_atoms(&self, i: u32, out: &mut Vec<u32>) {
        match self.ts[i as usize] {
            T::Bot | T::Top => {}
            T::Box(_) => {
                if !out.contains(&i) {
                    out.push(i);
                }
            }
            T::Not(a) => self.boxed_atoms(a, out),
            T::And(a, b) | T::Or(a, b) | T::Imp(a, b) => {
                self.boxed_atoms(a, out);
                self.boxed_atoms(b, out);
            }
        }
    }

    fn eval(&self, i: u32, vars: &[u32], bits: u64) -> bool {
        match self.ts[i as usize] {
            T::Bot => false,
            T::Top => true,
            T::Box(_) => {
                let k = vars.iter().position(|&v| v == i).expect("boxed atom registered");
                bits >> k & 1 == 1
            }
            T::Not(a) => !self.eval(a, vars, bits),
            T::And(a, b) => self.eval(a, vars, bits) && self.eval(b, vars, bits),
            T::Or(a, b) => self.eval(a, vars, bits) || self.eval(b, vars, bits),
            T::Imp(a, b) => !self.eval(a, vars, bits) || self.eval(b, vars, bits),
        }
    }

    fn tautology(&self, i: u32) -> bool {
        let mut vars = Vec::new();
        self.boxed_atoms(i, &mut vars);
        assert!(vars.len() < 24, "formula too large for truth tables");
        (0..1u64 << vars.len()).all(|bits| self.eval(i, &vars, bits))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Tautology,
    Distribution,
    Lob,
    /// Modus ponens from the lines holding `A` and `A → B`.
    ModusPonens(usize, usize),
    Necessitation(usize),
    /// Tautological consequence of the listed lines.
    Consequence(Vec<usize>),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines = |v: &[usize]| v.iter().map(|l| (l + 1).to_string()).collect::<Vec<_>>().join(", ");
        match self {
            Justification::Tautology => f.write_str("tautology"),
            Justification::Distribution => f.write_str("distribution"),
            Justification::Lob => f.write_str("Lob"),
            Justification::ModusPonens(a, b) => write!(f, "MP {}", lines(&[*a, *b])),
            Justification::Necessitation(a) => write!(f, "Nec {}", a + 1),
            Justification::Consequence(v) => write!(f, "consequence of {}", lines(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLine {
    pub formula: ModalFormula,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub lines: Vec<ProofLine>,
    /// Search rounds used.
    pub rounds: usize,
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.lines.iter().enumerate() {
            writeln!(f, "{:>3}. {}    [{}]", i + 1, l.formula, l.justification)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofSearch {
    Found(Proof),
    /// The finite search space closed without reaching the target.
    NotFound { rounds: usize },
}

#[derive(Clone)]
enum Why {
    Taut,
    K,
    Lob,
    Mp(u32, u32),
    Nec(u32),
    Cons(Vec<u32>),
}

/// Breadth-first search in rounds; `Err(BoundExceeded)` when `max_steps`
/// rounds pass without a verdict.
pub fn enumerate_proofs(f: &ModalFormula, system: &ModalSystem, max_steps: usize) -> Result<ProofSearch, ProvabilityError> {
    let expanded = system.expand(f)?;
    let mut ar = Arena::default();
    let target = ar.intern(&expanded);

    let mut sub = Vec::new();
    ar.subformulas(target, &mut sub, &mut HashSet::new());
    let mut base = sub.clone();
    for &s in &sub {
        let b = ar.add(T::Box(s));
        if !base.contains(&b) {
            base.push(b);
        }
    }
    let mut why: HashMap<u32, Why> = HashMap::new();
    for &a in &base {
        let ba = ar.add(T::Box(a));
        let inner = ar.add(T::Imp(ba, a));
        let binner = ar.add(T::Box(inner));
        let lob = ar.add(T::Imp(binner, ba));
        why.entry(lob).or_insert(Why::Lob);
        for &b in &base {
            let ab = ar.add(T::Imp(a, b));
            let bab = ar.add(T::Box(ab));
            let bb = ar.add(T::Box(b));
            let rhs = ar.add(T::Imp(ba, bb));
            let k = ar.add(T::Imp(bab, rhs));
            why.entry(k).or_insert(Why::K);
        }
    }
    let universe = ar.ts.len() as u32;
    for i in 0..universe {
        if ar.tautology(i) {
            why.insert(i, Why::Taut);
        }
    }

    let mut rounds = 0;
    loop {
        if why.contains_key(&target) {
            return Ok(ProofSearch::Found(extract(&ar, &why, target, rounds)));
        }
        if rounds >= max_steps {
            return Err(ProvabilityError::BoundExceeded(max_steps));
        }
        rounds += 1;
        let theorems: Vec<u32> = {
            let mut t: Vec<u32> = why.keys().copied().collect();
            t.sort_unstable();
            t
        };
        let mut fresh: Vec<(u32, Why)> = Vec::new();
        for &t in &theorems {
            if let T::Imp(a, b) = ar.ts[t as usize] {
                if why.contains_key(&a) && !why.contains_key(&b) {
                    fresh.push((b, Why::Mp(a, t)));
                }
            }
            if let Some(bt) = ar.find(T::Box(t)) {
                if bt < universe && !why.contains_key(&bt) {
                    fresh.push((bt, Why::Nec(t)));
                }
            }
        }
        let singles: Vec<u32> = theorems.iter().copied().filter(|t| !matches!(why[t], Why::Taut)).collect();
        let derived: Vec<u32> = theorems
            .iter()
            .copied()
            .filter(|t| matches!(why[t], Why::Mp(..) | Why::Nec(_)))
            .collect();
        if let Some(premises) = consequence(&mut ar, &singles, &derived, target) {
            fresh.push((target, Why::Cons(premises)));
        }
        let mut added = false;
        for (k, w) in fresh {
            if let std::collections::hash_map::Entry::Vacant(e) = why.entry(k) {
                e.insert(w);
                added = true;
            }
        }
        if !added {
            return Ok(ProofSearch::NotFound { rounds });
        }
    }
}

/// Premises from which `target` follows tautologically: any single theorem,
/// or a pair of derived ones.
fn consequence(ar: &mut Arena, singles: &[u32], derived: &[u32], target: u32) -> Option<Vec<u32>> {
    for &t in singles {
        let imp = ar.add(T::Imp(t, target));
        if ar.tautology(imp) {
            return Some(vec![t]);
        }
    }
    for (i, &t1) in derived.iter().enumerate() {
        for &t2 in &derived[i + 1..] {
            let both = ar.add(T::And(t1, t2));
            let imp = ar.add(T::Imp(both, target));
            if ar.tautology(imp) {
                return Some(vec![t1, t2]);
            }
        }
    }
    None
}

fn extract(ar: &Arena, why: &HashMap<u32, Why>, target: u32, rounds: usize) -> Proof {
    fn visit(ar: &Arena, why: &HashMap<u32, Why>, i: u32, line_of: &mut HashMap<u32, usize>, lines: &mut Vec<ProofLine>) {
        if line_of.contains_key(&i) {
            return;
        }
        let w = why[&i].clone();
        let deps: Vec<u32> = match &w {
            Why::Taut | Why::K | Why::Lob => vec![],
            Why::Mp(a, b) => vec![*a, *b],
            Why::Nec(a) => vec![*a],
            Why::Cons(v) => v.clone(),
        };
        for &d in &deps {
            visit(ar, why, d, line_of, lines);
        }
        let l = |d: &u32| line_of[d];
        let justification = match w {
            Why::Taut => Justification::Tautology,
            Why::K => Justification::Distribution,
            Why::Lob => Justification::Lob,
            Why::Mp(a, b) => Justification::ModusPonens(l(&a), l(&b)),
            Why::Nec(a) => Justification::Necessitation(l(&a)),
            Why::Cons(v) => Justification::Consequence(v.iter().map(l).collect()),
        };
        line_of.insert(i, lines.len());
        lines.push(ProofLine { formula: ar.to_formula(i), justification });
    }
    let mut lines = Vec::new();
    visit(ar, why, target, &mut HashMap::new(), &mut lines);
    Proof { lines, rounds }
}
