//! Gen specialization: replaces a `gen` whose dispatch is already decided
//! by the location the code runs at.
//!
//! ```text
//! gen(Loc, V, W) at Loc  ↦  V(W)
//! gen(s, V, W)   at c    ↦  req(V, W)
//! gen(c, V, W)   at s    ↦  call(V, W)
//! ```
//!
//! Any other `gen` (different locations, at least one a variable) is left
//! alone. The ambient location of `main` is the client, of a lambda code
//! its annotation; location-abstraction bodies and type-abstraction bodies
//! are values checked at every location, so nothing under them is
//! specialized.
//!
//! `V(W)` is a term, not a value, so the local case only fires for a `gen`
//! in term position — which is where the slicer puts every `gen`.

use crate::cs::syntax::{CsProgram, CsTerm, CsValue, OpenCode};
use crate::loc::Loc;

pub fn optimize(prog: &CsProgram) -> CsProgram {
    let mut out = prog.clone();
    out.main = term(Some(&Loc::Client), &prog.main);
    for code in out.codes.values_mut() {
        match &mut code.open {
            OpenCode::Lam { loc, body, .. } => *body = term(Some(&loc.clone()), body),
            OpenCode::LAbs { body, .. } => *body = value(None, body),
        }
    }
    out
}

/// `at` is `None` where the ambient location is universally quantified.
fn term(at: Option<&Loc>, t: &CsTerm) -> CsTerm {
    match t {
        CsTerm::Val(CsValue::Gen(loc, f, w)) if at == Some(loc) => CsTerm::App(value(at, f), value(at, w)),
        CsTerm::Val(v) => CsTerm::Val(value(at, v)),
        CsTerm::Let(x, m, n) => CsTerm::let_(x.clone(), term(at, m), term(at, n)),
        CsTerm::Proj(i, v) => CsTerm::Proj(*i, value(at, v)),
        CsTerm::App(f, w) => CsTerm::App(value(at, f), value(at, w)),
        CsTerm::TApp(v, ty) => CsTerm::TApp(value(at, v), ty.clone()),
        CsTerm::LApp(v, loc) => CsTerm::LApp(value(at, v), loc.clone()),
    }
}

fn value(at: Option<&Loc>, v: &CsValue) -> CsValue {
    match v {
        CsValue::Var(_) | CsValue::Int(_) | CsValue::Unit | CsValue::Clo(..) => v.clone(),
        CsValue::Pair(a, b) => CsValue::pair(value(at, a), value(at, b)),
        CsValue::TAbs(a, body) => CsValue::TAbs(a.clone(), Box::new(value(None, body))),
        CsValue::UnitM(w) => CsValue::unit_m(value(at, w)),
        CsValue::Do(x, m, n) => CsValue::do_(x.clone(), term(at, m), term(at, n)),
        CsValue::Req(f, w) => CsValue::req(value(at, f), value(at, w)),
        CsValue::Call(f, w) => CsValue::call(value(at, f), value(at, w)),
        CsValue::Gen(loc, f, w) => {
            let (f, w) = (value(at, f), value(at, w));
            match (at, loc) {
                (Some(Loc::Client), Loc::Server) => CsValue::req(f, w),
                (Some(Loc::Server), Loc::Client) => CsValue::call(f, w),
                _ => CsValue::gen(loc.clone(), f, w),
            }
        }
    }
}
