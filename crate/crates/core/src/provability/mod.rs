//! A decision procedure for closed sentences of provability logic (GL).
//!
//! Sentences may mention defined atoms. A [`ModalSystem`] gives each atom a
//! definition; self-reference must pass through `□`, which makes the system a
//! modalized fixed point with a unique valuation on the Kripke chain
//! `0 < 1 < 2 < …` (world `i` sees exactly the worlds below it).

mod chain;
mod enumerate;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

pub use chain::{evaluate_chain, ChainValues, is_provable, is_provable_at, modal_depth, modal_depth_capped, Evaluator, KripkeChain};
pub use enumerate::{enumerate_proofs, Justification, Proof, ProofLine, ProofSearch};
pub use parse::{parse_definitions, parse_formula, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModalFormula {
    Bot,
    Top,
    Atom(String),
    Not(Box<ModalFormula>),
    And(Box<ModalFormula>, Box<ModalFormula>),
    Or(Box<ModalFormula>, Box<ModalFormula>),
    Implies(Box<ModalFormula>, Box<ModalFormula>),
    Box(Box<ModalFormula>),
}

impl ModalFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        ModalFormula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: ModalFormula) -> Self {
        ModalFormula::Not(Box::new(f))
    }

    pub fn and(a: ModalFormula, b: ModalFormula) -> Self {
        ModalFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: ModalFormula, b: ModalFormula) -> Self {
        ModalFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: ModalFormula, b: ModalFormula) -> Self {
        ModalFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn boxed(f: ModalFormula) -> Self {
        ModalFormula::Box(Box::new(f))
    }

    /// Conjunction of all items; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = ModalFormula>) -> Self {
        items.into_iter().reduce(ModalFormula::and).unwrap_or(ModalFormula::Top)
    }

    /// Disjunction of all items; `false` when empty.
    pub fn disjunction(items: impl IntoIterator<Item = ModalFormula>) -> Self {
        items.into_iter().reduce(ModalFormula::or).unwrap_or(ModalFormula::Bot)
    }

    /// Löb's axiom for `f`: `□(□f → f) → □f`.
    pub fn lob(f: ModalFormula) -> Self {
        let bf = ModalFormula::boxed(f.clone());
        ModalFormula::implies(ModalFormula::boxed(ModalFormula::implies(bf.clone(), f)), bf)
    }

    /// Nesting depth of `□`, atoms counting as depth 0.
    pub fn box_depth(&self) -> usize {
        match self {
            ModalFormula::Bot | ModalFormula::Top | ModalFormula::Atom(_) => 0,
            ModalFormula::Not(a) => a.box_depth(),
            ModalFormula::And(a, b) | ModalFormula::Or(a, b) | ModalFormula::Implies(a, b) => a.box_depth().max(b.box_depth()),
            ModalFormula::Box(a) => 1 + a.box_depth(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ModalFormula::Bot | ModalFormula::Top | ModalFormula::Atom(_) => 1,
            ModalFormula::Not(a) | ModalFormula::Box(a) => 1 + a.size(),
            ModalFormula::And(a, b) | ModalFormula::Or(a, b) | ModalFormula::Implies(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn atoms(&self, out: &mut Vec<String>) {
        match self {
            ModalFormula::Bot | ModalFormula::Top => {}
            ModalFormula::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            ModalFormula::Not(a) | ModalFormula::Box(a) => a.atoms(out),
            ModalFormula::And(a, b) | ModalFormula::Or(a, b) | ModalFormula::Implies(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ModalFormula::Implies(..) => 1,
            ModalFormula::Or(..) => 2,
            ModalFormula::And(..) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for ModalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, child: &ModalFormula, min: u8| -> fmt::Result {
            if child.precedence() < min {
                write!(f, "({child})")
            } else {
                write!(f, "{child}")
            }
        };
        match self {
            ModalFormula::Bot => f.write_str("false"),
            ModalFormula::Top => f.write_str("true"),
            ModalFormula::Atom(a) => f.write_str(a),
            ModalFormula::Not(a) => {
                f.write_str("!")?;
                wrap(f, a, 4)
            }
            ModalFormula::Box(a) => {
                f.write_str("[]")?;
                wrap(f, a, 4)
            }
            ModalFormula::And(a, b) => {
                wrap(f, a, 3)?;
                f.write_str(" & ")?;
                wrap(f, b, 4)
            }
            ModalFormula::Or(a, b) => {
                wrap(f, a, 2)?;
                f.write_str(" | ")?;
                wrap(f, b, 3)
            }
            ModalFormula::Implies(a, b) => {
                wrap(f, a, 2)?;
                f.write_str(" -> ")?;
                wrap(f, b, 1)
            }
        }
    }
}

/// Definitions `atom := formula`, kept in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModalSystem {
    defs: BTreeMap<String, ModalFormula>,
}

impl ModalSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define(&mut self, atom: impl Into<String>, f: ModalFormula) -> &mut Self {
        self.defs.insert(atom.into(), f);
        self
    }

    pub fn with(mut self, atom: impl Into<String>, f: ModalFormula) -> Self {
        self.define(atom, f);
        self
    }

    pub fn get(&self, atom: &str) -> Option<&ModalFormula> {
        self.defs.get(atom)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &String> {
        self.defs.keys()
    }

    pub fn definitions(&self) -> impl Iterator<Item = (&String, &ModalFormula)> {
        self.defs.iter()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Union of two systems; definitions in `other` win.
    pub fn merged(&self, other: &ModalSystem) -> ModalSystem {
        let mut defs = self.defs.clone();
        defs.extend(other.defs.iter().map(|(k, v)| (k.clone(), v.clone())));
        ModalSystem { defs }
    }

    /// Replace every atom by its definition, once.
    pub fn unfold(&self, f: &ModalFormula) -> ModalFormula {
        match f {
            ModalFormula::Atom(a) => self.defs.get(a).cloned().unwrap_or_else(|| f.clone()),
            ModalFormula::Bot | ModalFormula::Top => f.clone(),
            ModalFormula::Not(a) => ModalFormula::not(self.unfold(a)),
            ModalFormula::Box(a) => ModalFormula::boxed(self.unfold(a)),
            ModalFormula::And(a, b) => ModalFormula::and(self.unfold(a), self.unfold(b)),
            ModalFormula::Or(a, b) => ModalFormula::or(self.unfold(a), self.unfold(b)),
            ModalFormula::Implies(a, b) => ModalFormula::implies(self.unfold(a), self.unfold(b)),
        }
    }

    /// Fully expand atoms. Fails on any cycle, guarded or not.
    pub fn expand(&self, f: &ModalFormula) -> Result<ModalFormula, ProvabilityError> {
        self.expand_inner(f, &mut Vec::new())
    }

    fn expand_inner(&self, f: &ModalFormula, stack: &mut Vec<String>) -> Result<ModalFormula, ProvabilityError> {
        Ok(match f {
            ModalFormula::Atom(a) => {
                if stack.contains(a) {
                    return Err(ProvabilityError::NotLetterless(a.clone()));
                }
                let def = self.defs.get(a).ok_or_else(|| ProvabilityError::UndefinedAtom(a.clone()))?;
                stack.push(a.clone());
                let out = self.expand_inner(def, stack)?;
                stack.pop();
                out
            }
            ModalFormula::Bot | ModalFormula::Top => f.clone(),
            ModalFormula::Not(a) => ModalFormula::not(self.expand_inner(a, stack)?),
            ModalFormula::Box(a) => ModalFormula::boxed(self.expand_inner(a, stack)?),
            ModalFormula::And(a, b) => ModalFormula::and(self.expand_inner(a, stack)?, self.expand_inner(b, stack)?),
            ModalFormula::Or(a, b) => ModalFormula::or(self.expand_inner(a, stack)?, self.expand_inner(b, stack)?),
            ModalFormula::Implies(a, b) => {
                ModalFormula::implies(self.expand_inner(a, stack)?, self.expand_inner(b, stack)?)
            }
        })
    }
}

impl fmt::Display for ModalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, d) in &self.defs {
            writeln!(f, "{a} := {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProvabilityError {
    #[error("definition of `{0}` refers to itself without passing through []")]
    UnguardedCycle(String),
    #[error("atom `{0}` has no definition")]
    UndefinedAtom(String),
    #[error("atom `{0}` is self-referential, so the formula has no letterless expansion")]
    NotLetterless(String),
    #[error("proof search stopped after {0} rounds without a verdict")]
    BoundExceeded(usize),
    #[error("verdict changed between chain lengths {0} and {1}")]
    Unstable(usize, usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
