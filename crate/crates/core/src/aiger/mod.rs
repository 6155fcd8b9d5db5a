//! ASCII AIGER circuits: data model, parsing, canonical serialization,
//! validation and simulation.

mod circuit;
mod parse;
mod sim;
mod validate;

pub use circuit::{
    serialize_aiger, AigerCircuit, AndGate, CanonicalToken, CircuitStats, Latch, Literal, SymbolKind,
};
pub use parse::{parse_aiger, ParseMode};
pub use sim::{simulate_step, Simulator};
pub use validate::{validate, Defect, DefectKind, Section, ValidationReport};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AigerError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("invalid circuit: {0}")]
    Invalid(Defect),
}

/// The three arbiter circuits of the repair walkthrough, in canonical form:
/// the initial faulty prediction, the still faulty first repair, and the
/// correct round-robin arbiter.
pub mod arbiter {
    /// Grants `g_0` and `g_1` share literal 20; the counter is incomplete.
    pub const FAULTY: &str = "aag 10 5 2 5 3\n2\n4\n6\n8\n10\n12 18\n14 16\n16\n18\n20\n20\n0\n16 15 13\n18 14 13\n20 15 12\n";
    /// Latch 1 now has counter logic, but `g_2` and `g_0` share literal 18.
    pub const PARTIAL: &str = "aag 11 5 2 5 4\n2\n4\n6\n8\n10\n12 13\n14 22\n16\n18\n18\n20\n0\n16 15 13\n18 15 12\n20 14 13\n22 19 17\n";
    /// Two-bit counter driving one-hot grants.
    pub const CORRECT: &str = "aag 12 5 2 5 5\n2\n4\n6\n8\n10\n12 13\n14 24\n16\n18\n20\n22\n0\n16 15 13\n18 15 12\n20 14 13\n22 14 12\n24 23 17\n";
}
