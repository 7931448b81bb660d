//! Monad-law rewrites on erased programs.
//!
//! Each rewrite is applied everywhere it fits, once, bottom-up. They are
//! used to check that the runtime does not depend on how `do` blocks are
//! nested: a rewritten program must produce the same value and the same
//! conversation.

use std::collections::HashSet;

use crate::erasure::syntax::{Branch, UCode, UTerm, UValue, UntypedProgram};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    /// `do x <- unit v; n` ⇒ `n[v/x]`, when no binder in `n` captures `v`.
    LeftIdentity,
    /// `do x <- m; unit x` ⇒ `m`.
    RightIdentity,
    /// `do x <- (do y <- m; n); p` ⇒ `do y <- m; do x <- n; p`, when `y` is
    /// not free in `p`.
    Associativity,
    /// `do x <- m; n` ⇒ `do x <- (do w <- m; unit w); n`.
    RightIdentityExpand,
}

impl Law {
    pub const ALL: [Law; 4] = [
        Law::LeftIdentity,
        Law::RightIdentity,
        Law::Associativity,
        Law::RightIdentityExpand,
    ];
}

pub fn rewrite_program(prog: &UntypedProgram, law: Law) -> (UntypedProgram, usize) {
    let mut r = Rewriter {
        law,
        count: 0,
        fresh: 0,
    };
    let client_main = r.term(&prog.client_main);
    let mut store = |s: &crate::erasure::syntax::UStore| {
        s.iter()
            .map(|(name, code)| {
                (
                    name.clone(),
                    UCode {
                        free: code.free.clone(),
                        param: code.param.clone(),
                        body: r.term(&code.body),
                    },
                )
            })
            .collect()
    };
    let client_store = store(&prog.client_store);
    let server_store = store(&prog.server_store);
    let count = r.count;
    (
        UntypedProgram {
            client_main,
            client_store,
            server_store,
        },
        count,
    )
}

pub fn rewrite_term(t: &UTerm, law: Law) -> (UTerm, usize) {
    let mut r = Rewriter {
        law,
        count: 0,
        fresh: 0,
    };
    let t = r.term(t);
    (t, r.count)
}

struct Rewriter {
    law: Law,
    count: usize,
    fresh: usize,
}

impl Rewriter {
    fn term(&mut self, t: &UTerm) -> UTerm {
        match t {
            UTerm::Val { v } => UTerm::val(self.value(v)),
            UTerm::Let { x, m, n } => UTerm::let_(x.clone(), self.term(m), self.term(n)),
            UTerm::Proj { i, v } => UTerm::Proj {
                i: *i,
                v: self.value(v),
            },
            UTerm::App { f, a } => UTerm::app(self.value(f), self.value(a)),
            UTerm::Send { v } => UTerm::Send { v: self.value(v) },
            UTerm::Receive | UTerm::Loop => t.clone(),
            UTerm::Case { v, branches, gen } => UTerm::Case {
                v: self.value(v),
                branches: branches
                    .iter()
                    .map(|b| Branch {
                        ctor: b.ctor,
                        binders: b.binders.clone(),
                        body: self.term(&b.body),
                    })
                    .collect(),
                gen: *gen,
            },
        }
    }

    fn value(&mut self, v: &UValue) -> UValue {
        match v {
            UValue::Var { .. } | UValue::Int { .. } | UValue::Unit => v.clone(),
            UValue::Pair { l, r } => UValue::pair(self.value(l), self.value(r)),
            UValue::Con { ctor, args } => UValue::con(*ctor, args.iter().map(|a| self.value(a)).collect()),
            UValue::Closure { env, name } => {
                UValue::closure(env.iter().map(|a| self.value(a)).collect(), name.clone())
            }
            UValue::UnitM { v } => UValue::unit_m(self.value(v)),
            UValue::Do { x, m, n } => {
                let m = self.term(m);
                let n = self.term(n);
                self.do_(x, m, n)
            }
        }
    }

    /// The rewrite at one `do`, whose parts are already rewritten. A
    /// rewrite that does not apply leaves the `do` as it is.
    fn do_(&mut self, x: &str, m: UTerm, n: UTerm) -> UValue {
        match self.law {
            Law::LeftIdentity => {
                if let UTerm::Val {
                    v: UValue::UnitM { v },
                } = &m
                {
                    let mut fv = HashSet::new();
                    v.free_vars(&mut fv);
                    // `n[v/x]` replaces a value, so `n` itself must be one.
                    if matches!(n, UTerm::Val { .. }) && n.bound_vars().is_disjoint(&fv) {
                        if let UTerm::Val { v: body } = n.subst(x, v) {
                            self.count += 1;
                            return body;
                        }
                    }
                }
            }
            Law::RightIdentity => {
                if n == UTerm::val(UValue::unit_m(UValue::var(x))) {
                    if let UTerm::Val { v } = &m {
                        self.count += 1;
                        return v.clone();
                    }
                }
            }
            Law::Associativity => {
                if let UTerm::Val {
                    v: UValue::Do { x: y, m: m1, n: n1 },
                } = &m
                {
                    if y == x || !n.free_var_set().contains(y) {
                        self.count += 1;
                        let inner = UValue::do_(x, (**n1).clone(), n);
                        return UValue::do_(y.clone(), (**m1).clone(), UTerm::val(inner));
                    }
                }
            }
            Law::RightIdentityExpand => {
                self.count += 1;
                self.fresh += 1;
                let w = format!("_w{}", self.fresh);
                let wrapped = UValue::do_(w.clone(), m, UTerm::val(UValue::unit_m(UValue::var(w))));
                return UValue::do_(x, UTerm::val(wrapped), n);
            }
        }
        UValue::do_(x, m, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: UValue) -> UTerm {
        UTerm::val(UValue::unit_m(v))
    }

    #[test]
    fn left_identity_substitutes() {
        let t = UTerm::val(UValue::do_("x", unit(UValue::int(1)), unit(UValue::var("x"))));
        let (t, n) = rewrite_term(&t, Law::LeftIdentity);
        assert_eq!(n, 1);
        assert_eq!(t, unit(UValue::int(1)));
    }

    #[test]
    fn left_identity_refuses_to_capture() {
        // do x <- unit y; do y <- receive; unit (x, y)
        let inner = UValue::do_(
            "y",
            UTerm::Receive,
            unit(UValue::pair(UValue::var("x"), UValue::var("y"))),
        );
        let t = UTerm::val(UValue::do_("x", unit(UValue::var("y")), UTerm::val(inner)));
        let (u, n) = rewrite_term(&t, Law::LeftIdentity);
        assert_eq!(n, 0);
        assert_eq!(u, t);
    }

    #[test]
    fn associativity_reassociates() {
        let m = UValue::do_("y", UTerm::Receive, unit(UValue::var("y")));
        let t = UTerm::val(UValue::do_("x", UTerm::val(m), unit(UValue::var("x"))));
        let (t, n) = rewrite_term(&t, Law::Associativity);
        assert_eq!(n, 1);
        assert_eq!(t.to_string(), "do y <- receive; do x <- unit y; unit x");
    }
}
