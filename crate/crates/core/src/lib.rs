//! Exact learning of PSL formulas (LTL plus the triggers operator),
//! LTL formulas, and regular expressions from labeled traces.
//!
//! Given disjoint sets of positive and negative ultimately periodic words,
//! the learner produces a minimal consistent formula by reducing the search
//! to a series of propositional satisfiability instances. An independent
//! automaton-based evaluator doubles as the verification oracle for every
//! result the SAT pipeline produces.

pub mod automaton;
pub mod cnf;
pub mod encode;
pub mod enumerate;
mod error;
pub mod formula;
pub mod learn;
pub mod parse;
pub mod sampleio;
pub mod samplegen;
pub mod semantics;
pub mod solver;
pub mod trace;

pub use encode::Mode;
pub use error::{Error, Result};
pub use formula::{Formula, TypeCtx};
pub use parse::parse_formula;
pub use trace::{FiniteSample, FiniteWord, LassoWord, PropositionSet, Sample, Symbol};
