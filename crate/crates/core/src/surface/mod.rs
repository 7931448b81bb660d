//! Concrete syntax of the source calculus: lexer, parser, pretty-printer
//! and the node-count metric.

use std::fmt;

use thiserror::Error;

use crate::rpc::syntax::Span;

pub mod count;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use count::{count_nodes, count_term};
pub use parser::{parse_program, parse_term, parse_type};
pub use pretty::{pretty_program, pretty_term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub start: (u32, u32),
    pub end: (u32, u32),
    pub message: String,
}

impl SyntaxError {
    pub fn new(at: (u32, u32), message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            start: at,
            end: at,
            message: message.into(),
        }
    }

    pub fn spanned(span: Span, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            start: span.start,
            end: span.end,
            message: message.into(),
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.start.0, self.start.1, self.message)
    }
}
