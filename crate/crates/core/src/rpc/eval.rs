//! Big-step evaluation of closed source terms.

use thiserror::Error;

use crate::loc::{Loc, Side};
use crate::rpc::syntax::{RpcTerm, TermKind};

pub const DEFAULT_DEPTH_LIMIT: usize = 100_000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalCounters {
    /// Instances of the application rule, local or remote.
    pub beta_apps: u64,
    /// The subset of `beta_apps` whose body ran at the other location.
    pub remote_apps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation exceeded the recursion-depth limit of {0}")]
    DepthExceeded(usize),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Evaluates `term` at `at` with the default depth limit.
pub fn eval(term: &RpcTerm, at: Side, counters: &mut EvalCounters) -> Result<RpcTerm, EvalError> {
    eval_with_limit(term, at, counters, DEFAULT_DEPTH_LIMIT)
}

pub fn eval_with_limit(
    term: &RpcTerm,
    at: Side,
    counters: &mut EvalCounters,
    limit: usize,
) -> Result<RpcTerm, EvalError> {
    let mut ev = Evaluator {
        counters,
        limit,
        depth: 0,
    };
    ev.eval(term, at)
}

struct Evaluator<'a> {
    counters: &'a mut EvalCounters,
    limit: usize,
    depth: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, term: &RpcTerm, at: Side) -> Result<RpcTerm, EvalError> {
        if self.depth >= self.limit {
            return Err(EvalError::DepthExceeded(self.limit));
        }
        self.depth += 1;
        let out = self.eval_inner(term, at);
        self.depth -= 1;
        out
    }

    fn eval_inner(&mut self, term: &RpcTerm, at: Side) -> Result<RpcTerm, EvalError> {
        match &term.kind {
            TermKind::Var(x) => Err(EvalError::Invariant(format!("free variable {x}"))),
            TermKind::Int(_)
            | TermKind::Unit
            | TermKind::Lam { .. }
            | TermKind::TAbs { .. }
            | TermKind::LAbs { .. } => Ok(term.clone()),
            TermKind::App(fun, arg) => {
                let f = self.eval(fun, at)?;
                let w = self.eval(arg, at)?;
                match f.kind {
                    TermKind::Lam { loc, param, body, .. } => {
                        let b = loc
                            .side()
                            .ok_or_else(|| EvalError::Invariant(format!("lambda at open location {loc}")))?;
                        self.counters.beta_apps += 1;
                        if b != at {
                            self.counters.remote_apps += 1;
                        }
                        self.eval(&body.subst(&param, &w), b)
                    }
                    _ => Err(EvalError::Invariant("applied a non-lambda".into())),
                }
            }
            TermKind::TApp(fun, ty) => match self.eval(fun, at)?.kind {
                TermKind::TAbs { var, body } => Ok(body.subst_ty(&var, ty)),
                _ => Err(EvalError::Invariant(
                    "type application of a non-abstraction".into(),
                )),
            },
            TermKind::LApp(fun, loc) => {
                if let Loc::Var(l) = loc {
                    return Err(EvalError::Invariant(format!(
                        "location application at open location {l}"
                    )));
                }
                match self.eval(fun, at)?.kind {
                    TermKind::LAbs { var, body } => Ok(body.subst_loc(&var, loc)),
                    _ => Err(EvalError::Invariant(
                        "location application of a non-abstraction".into(),
                    )),
                }
            }
            TermKind::Pair(l, r) => {
                let lv = self.eval(l, at)?;
                let rv = self.eval(r, at)?;
                Ok(RpcTerm::with_span(
                    TermKind::Pair(Box::new(lv), Box::new(rv)),
                    term.span,
                ))
            }
            TermKind::Proj(i, t) => match self.eval(t, at)?.kind {
                TermKind::Pair(l, r) => Ok(if *i == 1 { *l } else { *r }),
                _ => Err(EvalError::Invariant("projection of a non-pair".into())),
            },
        }
    }
}
