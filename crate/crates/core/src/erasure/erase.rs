//! Type and location erasure from the typed client-server calculus.
//!
//! Types disappear; location variables become ordinary term variables and
//! the constants become the constructors `Client`/`Server`. Each code is
//! erased once per map it belongs to, with the side deciding how a
//! runtime-dispatched `gen` splits into its local and remote branches.

use thiserror::Error;

use crate::cs::syntax::{CsProgram, CsTerm, CsValue, OpenCode};
use crate::erasure::syntax::{Ctor, UCode, UStore, UTerm, UValue, UntypedProgram};
use crate::loc::{Loc, Side};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EraseError {
    #[error("type abstraction over {0} whose body is not `unit V`")]
    TypeAbsBody(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EraseOptions {
    /// Miscompile every remote call into two sends, for protocol tests.
    pub double_send: bool,
}

/// The term variable standing for location variable `l`.
pub fn loc_var(l: &str) -> String {
    format!("_loc_{l}")
}

pub fn erase_loc(loc: &Loc) -> UValue {
    match loc {
        Loc::Client => UValue::con(Ctor::Client, vec![]),
        Loc::Server => UValue::con(Ctor::Server, vec![]),
        Loc::Var(l) => UValue::var(loc_var(l)),
    }
}

pub fn erase(prog: &CsProgram) -> Result<UntypedProgram, EraseError> {
    erase_with(prog, EraseOptions::default())
}

pub fn erase_with(prog: &CsProgram, opts: EraseOptions) -> Result<UntypedProgram, EraseError> {
    let eraser = Eraser { opts };
    Ok(UntypedProgram {
        client_main: eraser.term(&prog.main, Side::Client)?,
        client_store: eraser.store(prog, Side::Client)?,
        server_store: eraser.store(prog, Side::Server)?,
    })
}

/// `⌊V⌋_a` with default options.
pub fn erase_value(v: &CsValue, side: Side) -> Result<UValue, EraseError> {
    Eraser {
        opts: EraseOptions::default(),
    }
    .value(v, side)
}

pub fn erase_term(t: &CsTerm, side: Side) -> Result<UTerm, EraseError> {
    Eraser {
        opts: EraseOptions::default(),
    }
    .term(t, side)
}

struct Eraser {
    opts: EraseOptions,
}

impl Eraser {
    fn store(&self, prog: &CsProgram, side: Side) -> Result<UStore, EraseError> {
        let mut store = UStore::new();
        for (name, code) in prog.map(side) {
            let mut free: Vec<String> = code.loc_params.iter().map(|l| loc_var(l)).collect();
            free.extend(code.env.iter().map(|(z, _)| z.clone()));
            let (param, body) = match &code.open {
                OpenCode::Lam { param, body, .. } => (param.clone(), self.term(body, side)?),
                OpenCode::LAbs { var, body, .. } => (loc_var(var), UTerm::val(self.value(body, side)?)),
            };
            store.insert(name.clone(), UCode { free, param, body });
        }
        Ok(store)
    }

    fn remote(&self, f: UValue, a: UValue) -> UValue {
        let send = UTerm::Send {
            v: UValue::con(Ctor::Apply, vec![f, a]),
        };
        let rest = if self.opts.double_send {
            UTerm::val(UValue::do_("_u", send.clone(), UTerm::Loop))
        } else {
            UTerm::Loop
        };
        UValue::do_("_u", send, rest)
    }

    /// The case a `gen` erases to: the local branch is a plain application
    /// and the remote branch is the side's req/call shape.
    fn gen(&self, loc: &Loc, f: &CsValue, w: &CsValue, side: Side) -> Result<UTerm, EraseError> {
        let (f, w) = (self.value(f, side)?, self.value(w, side)?);
        let local = UTerm::app(f.clone(), w.clone());
        let remote = UTerm::val(self.remote(f, w));
        let (client, server) = match side {
            Side::Client => (local, remote),
            Side::Server => (remote, local),
        };
        Ok(UTerm::if_loc(erase_loc(loc), client, server, true))
    }

    fn value(&self, v: &CsValue, side: Side) -> Result<UValue, EraseError> {
        Ok(match v {
            CsValue::Var(x) => UValue::var(x),
            CsValue::Int(n) => UValue::int(*n),
            CsValue::Unit => UValue::Unit,
            CsValue::Pair(a, b) => UValue::pair(self.value(a, side)?, self.value(b, side)?),
            CsValue::Clo(env, code_ref) => {
                let mut values: Vec<UValue> = code_ref.loc_args.iter().map(erase_loc).collect();
                for w in env {
                    values.push(self.value(w, side)?);
                }
                UValue::closure(values, code_ref.name.clone())
            }
            CsValue::TAbs(a, body) => match &**body {
                CsValue::UnitM(inner) => self.value(inner, side)?,
                _ => return Err(EraseError::TypeAbsBody(a.clone())),
            },
            CsValue::UnitM(w) => UValue::unit_m(self.value(w, side)?),
            CsValue::Do(x, m, n) => UValue::do_(x.clone(), self.term(m, side)?, self.term(n, side)?),
            CsValue::Req(f, w) | CsValue::Call(f, w) => {
                self.remote(self.value(f, side)?, self.value(w, side)?)
            }
            // Only reachable for a gen outside term position, which the
            // slicer never produces; bind its result to stay a value.
            CsValue::Gen(loc, f, w) => UValue::do_(
                "_r",
                self.gen(loc, f, w, side)?,
                UTerm::val(UValue::unit_m(UValue::var("_r"))),
            ),
        })
    }

    fn term(&self, t: &CsTerm, side: Side) -> Result<UTerm, EraseError> {
        Ok(match t {
            CsTerm::Val(CsValue::Gen(loc, f, w)) => self.gen(loc, f, w, side)?,
            CsTerm::Val(v) => UTerm::val(self.value(v, side)?),
            CsTerm::Let(x, m, n) => UTerm::let_(x.clone(), self.term(m, side)?, self.term(n, side)?),
            CsTerm::Proj(i, v) => UTerm::Proj {
                i: *i,
                v: self.value(v, side)?,
            },
            CsTerm::App(f, w) => UTerm::app(self.value(f, side)?, self.value(w, side)?),
            CsTerm::TApp(v, _) => UTerm::val(UValue::unit_m(self.value(v, side)?)),
            CsTerm::LApp(v, loc) => UTerm::app(self.value(v, side)?, erase_loc(loc)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::syntax::{CodeRef, CsType};

    #[test]
    fn closure_with_location_argument() {
        let v = CsValue::Clo(
            vec![],
            CodeRef {
                name: "f2".into(),
                loc_args: vec![Loc::Server],
                ty_args: vec![],
            },
        );
        assert_eq!(
            erase_value(&v, Side::Client).unwrap().to_string(),
            "Closure [Server] f2"
        );
    }

    #[test]
    fn req_becomes_send_then_loop() {
        let v = CsValue::req(CsValue::var("h"), CsValue::Int(1));
        assert_eq!(
            erase_value(&v, Side::Client).unwrap().to_string(),
            "do _u <- send(Apply h 1); loop ()"
        );
    }

    #[test]
    fn type_abstraction_erases_to_its_value() {
        let tabs = CsValue::TAbs("a".into(), Box::new(CsValue::unit_m(CsValue::var("x"))));
        assert_eq!(erase_value(&tabs, Side::Server).unwrap(), UValue::var("x"));
        let app = CsTerm::TApp(tabs, CsType::INT);
        assert_eq!(erase_term(&app, Side::Server).unwrap().to_string(), "unit x");
        let bad = CsValue::TAbs("a".into(), Box::new(CsValue::Int(1)));
        assert!(erase_value(&bad, Side::Client).is_err());
    }

    #[test]
    fn gen_branches_depend_on_the_side() {
        let t = CsTerm::Val(CsValue::gen(Loc::Client, CsValue::var("g"), CsValue::Int(1)));
        assert_eq!(
            erase_term(&t, Side::Client).unwrap().to_string(),
            "case Client of { Client -> g(1); Server -> do _u <- send(Apply g 1); loop () }"
        );
        assert_eq!(
            erase_term(&t, Side::Server).unwrap().to_string(),
            "case Client of { Client -> do _u <- send(Apply g 1); loop (); Server -> g(1) }"
        );
    }
}
