//! Reachability for one-counter automata whose states carry equality or
//! disequality tests on the counter.
//!
//! Positive answers come with runs, negative answers with pairs of
//! arithmetic-progression sets that can be checked independently.

pub mod apset;
pub mod automaton;
pub mod flow;
pub mod harness;
pub mod invariant;
pub mod oracle;
pub mod path;
pub mod pessimistic;
pub mod scc;
pub mod solver;
pub mod structure;

#[cfg(test)]
mod testing;

pub use automaton::{parse_oca, Configuration, Constraint, Oca, OcaBuilder, ParseError, StateId, Transition};
pub use path::{apply_path, Mode, Path, Run};
