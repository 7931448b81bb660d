//! Program size, measured in term and location nodes.
//!
//! Every term constructor is one node, and so is every location occurrence
//! in term position (a lambda's annotation and a location argument). Types
//! contribute nothing, and binder names are part of their constructor. The
//! size of a file is the sum of its definition bodies and `main`.

use crate::rpc::syntax::{RpcTerm, SourceProgram, TermKind};

pub fn count_term(term: &RpcTerm) -> usize {
    term.subterms()
        .iter()
        .map(|t| match t.kind {
            TermKind::Lam { .. } | TermKind::LApp(..) => 2,
            _ => 1,
        })
        .sum()
}

pub fn count_nodes(program: &SourceProgram) -> usize {
    program.defs.iter().map(|d| count_term(&d.body)).sum::<usize>() + count_term(&program.main)
}
