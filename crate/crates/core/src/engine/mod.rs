//! Proof search over a timestamped stream: unification, SLD resolution and
//! the symbolic labeling oracle. `solve` is a pure function of
//! (program, context, query); programs and contexts are immutable and safe
//! to share across threads.

pub mod oracle;
pub mod solve;
pub mod subst;

pub use oracle::label_oracle;
pub use solve::{solve, solve_with_options, ChoiceId, Literal, Proof, SolveOptions, StreamContext};
pub use subst::{unify, Substitution};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("evaluation error in {origin} at goal {goal}: {message}")]
    Evaluation {
        goal: String,
        origin: String,
        message: String,
    },
    #[error("resolution step limit of {limit} exceeded")]
    StepLimit { limit: u64 },
    #[error("query {query} is not ground")]
    NonGroundQuery { query: String },
    #[error("annotated disjunction #{index} is not ground; only ground disjunctions are supported")]
    NonGroundAd { index: usize },
    #[error("invalid stream context: {message}")]
    InvalidContext { message: String },
}
