//! Rule-language front end: syntax tree, parser, pretty-printer, static
//! validation and the bundled sequence library.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod stdlib;
pub mod validate;

pub use ast::{AnnotatedDisjunction, Atom, Clause, NeuralDecl, Program, Symbol, Term};
pub use parser::{parse_atom_str, parse_program, parse_term_str};
pub use pretty::pretty_print;
pub use stdlib::{default_program, stdlib};
pub use validate::{validate, BuiltinRegistry, Diagnostic, DiagnosticKind};

use thiserror::Error;

/// Errors from the language front end.
#[derive(Debug, Error)]
pub enum RuleError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
}

impl RuleError {
    pub(crate) fn syntax(line: usize, col: usize, message: &str) -> Self {
        RuleError::Syntax {
            line,
            col,
            message: message.to_string(),
        }
    }
}
