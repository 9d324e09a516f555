//! k-level control-flow analysis (kCFA) workbench for a labeled λ-calculus.
//!
//! * [`syntax`]: concrete syntax, labeling and structural predicates.
//! * [`exact`]: the instrumented evaluator recording every flow.
//! * [`kcfa`]: the abstract interpreter, its fixpoint and flow queries.
//! * [`gadgets`]: linear Boolean logic, the flow widget and circuit compilation.
//! * [`reduction`]: closure-explosion families and the Turing-machine encoding.
//! * [`bench`]: growth-curve measurements over generated families.

pub mod bench;
pub mod exact;
pub mod gadgets;
pub mod json;
pub mod kcfa;
pub mod reduction;
pub mod syntax;

pub use exact::{eval_exact, CacheKey, Closure, Contour, ExactCache, Fuel};
pub use kcfa::{analyze, AbstractCache, AnalysisStats, FlowQuery};
pub use syntax::{parse, unparse, Expr, Label, Program};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {0}")]
    Syntax(#[from] syntax::SyntaxError),
    #[error(transparent)]
    Program(#[from] syntax::ProgramError),
    #[error(transparent)]
    Eval(#[from] exact::EvalError),
    #[error(transparent)]
    Analysis(#[from] kcfa::AnalysisError),
    #[error(transparent)]
    Circuit(#[from] gadgets::CircuitError),
    #[error(transparent)]
    Reduction(#[from] reduction::ReductionError),
    #[error("query: {0}")]
    Query(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
