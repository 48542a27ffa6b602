//! Problem definitions: the `.dtp` text format and the builtin suite.

mod builtins;
mod dsl;

use std::fmt;
use std::str::FromStr;

pub use builtins::{causal_pd, noisy_copy_pd, retro_patch_scenario};
pub use dsl::{parse_problem, round_trip, SyntaxError};

use crate::worldmodel::{DecisionProblem, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("invalid problem: {0}")]
    Semantic(ModelError),
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BuiltinId {
    EvidentialBlackmail,
    CounterfactualBlackmail,
    RetroBlackmail,
    CopyPd,
    NoisyPd80,
    ProgrammerPd90,
    SelfmodCopyPd,
    Game0To10,
    Newcomb,
}

impl BuiltinId {
    pub const ALL: [BuiltinId; 9] = [
        BuiltinId::EvidentialBlackmail,
        BuiltinId::CounterfactualBlackmail,
        BuiltinId::RetroBlackmail,
        BuiltinId::CopyPd,
        BuiltinId::NoisyPd80,
        BuiltinId::ProgrammerPd90,
        BuiltinId::SelfmodCopyPd,
        BuiltinId::Game0To10,
        BuiltinId::Newcomb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinId::EvidentialBlackmail => "evidential-blackmail",
            BuiltinId::CounterfactualBlackmail => "counterfactual-blackmail",
            BuiltinId::RetroBlackmail => "retro-blackmail",
            BuiltinId::CopyPd => "copy-pd",
            BuiltinId::NoisyPd80 => "noisy-pd-80",
            BuiltinId::ProgrammerPd90 => "programmer-pd-90",
            BuiltinId::SelfmodCopyPd => "selfmod-copy-pd",
            BuiltinId::Game0To10 => "game-0-10",
            BuiltinId::Newcomb => "newcomb",
        }
    }
}

impl fmt::Display for BuiltinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinId {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinId::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| ProblemError::UnknownBuiltin(s.to_string()))
    }
}

pub fn builtin(id: BuiltinId) -> DecisionProblem {
    builtins::build(id)
}

/// Look a builtin up by name.
pub fn builtin_named(name: &str) -> Result<DecisionProblem, ProblemError> {
    Ok(builtin(name.parse()?))
}
