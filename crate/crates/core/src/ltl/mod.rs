//! Linear temporal logic: syntax, parsing, lasso semantics and
//! assume-guarantee specifications.

mod formula;
mod lasso;
mod parse;
mod spec;

pub use formula::{print_ltl, AstStats, Ltl, LtlOp};
pub use lasso::{eval_lasso, LassoTrace};
pub use parse::parse_ltl;
pub use spec::SpecRecord;
pub use spec::{arbiter_spec, Specification, MAX_IO};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown atom '{name}' at {line}:{col}")]
    UnknownAtom { name: String, line: usize, col: usize },
    #[error("atom '{atom}' is not in the trace alphabet")]
    AlphabetMismatch { atom: String },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}
