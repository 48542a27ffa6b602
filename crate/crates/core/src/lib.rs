//! Decision-theory laboratory: finite world models, exact inference, and
//! evidential, causal, updateless, graphical and proof-based decision procedures.

pub mod inference;
pub mod problems;
pub mod proofudt;
pub mod provability;
pub mod rational;
pub mod report;
pub mod theories;
pub mod worldmodel;

pub use rational::{q, Rational};
