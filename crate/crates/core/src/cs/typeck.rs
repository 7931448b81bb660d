//! Static semantics of the client-server calculus: term, value and closure
//! typing, code typing and program well-formedness, and the stack /
//! configuration typing used as a runtime verifier by the machine.

use std::collections::HashSet;

use thiserror::Error;

use crate::cs::machine::{Configuration, Frame};
use crate::cs::syntax::{CodeRef, CsProgram, CsTerm, CsType, CsValue, OpenCode, Placement};
use crate::loc::{Loc, Side};
use crate::names::rename_away;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct CsTypeError {
    pub message: String,
}

fn err<T>(message: impl Into<String>) -> Result<T, CsTypeError> {
    Err(CsTypeError {
        message: message.into(),
    })
}

#[derive(Clone, Debug)]
enum Entry {
    Loc(String),
    Ty(String),
    Var(String, CsType),
}

#[derive(Clone, Debug, Default)]
pub struct CsEnv {
    entries: Vec<Entry>,
}

impl CsEnv {
    pub fn new() -> CsEnv {
        CsEnv::default()
    }

    pub fn push_loc(&mut self, l: impl Into<String>) {
        self.entries.push(Entry::Loc(l.into()));
    }

    pub fn push_ty(&mut self, a: impl Into<String>) {
        self.entries.push(Entry::Ty(a.into()));
    }

    pub fn push_var(&mut self, x: impl Into<String>, ty: CsType) {
        self.entries.push(Entry::Var(x.into(), ty));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    fn lookup(&self, x: &str) -> Option<&CsType> {
        self.entries.iter().rev().find_map(|e| match e {
            Entry::Var(y, ty) if y == x => Some(ty),
            _ => None,
        })
    }

    fn has_loc(&self, l: &str) -> bool {
        self.entries.iter().any(|e| matches!(e, Entry::Loc(m) if m == l))
    }

    fn has_ty(&self, a: &str) -> bool {
        self.entries.iter().any(|e| matches!(e, Entry::Ty(b) if b == a))
    }

    fn loc_names(&self) -> HashSet<String> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                Entry::Loc(l) => Some(l.clone()),
                _ => None,
            })
            .collect()
    }

    fn check_loc(&self, loc: &Loc) -> Result<(), CsTypeError> {
        match loc {
            Loc::Var(l) if !self.has_loc(l) => err(format!("unbound location variable {l}")),
            _ => Ok(()),
        }
    }

    fn check_type(&self, ty: &CsType) -> Result<(), CsTypeError> {
        for a in ty.free_ty_vars() {
            if !self.has_ty(&a) {
                return err(format!("unbound type variable {a}"));
            }
        }
        for l in ty.free_loc_vars() {
            if !self.has_loc(&l) {
                return err(format!("unbound location variable {l}"));
            }
        }
        Ok(())
    }

    /// A location variable not bound anywhere in the environment, for the
    /// "at every location" premises.
    fn fresh_loc(&self) -> String {
        rename_away("l0", &self.loc_names())
    }
}

fn expect_eq(found: &CsType, expected: &CsType, what: &str) -> Result<(), CsTypeError> {
    if found.alpha_eq(expected) {
        Ok(())
    } else {
        err(format!("{what}: expected {expected}, found {found}"))
    }
}

fn relocatable(ty: &CsType) -> Result<(), CsTypeError> {
    if ty.valty() {
        Ok(())
    } else {
        err(format!("non-relocatable payload of type {ty}"))
    }
}

pub fn typecheck_term(
    prog: &CsProgram,
    env: &mut CsEnv,
    at: &Loc,
    term: &CsTerm,
) -> Result<CsType, CsTypeError> {
    match term {
        CsTerm::Val(v) => typecheck_value(prog, env, at, v),
        CsTerm::Let(x, m, n) => {
            let a = typecheck_term(prog, env, at, m)?;
            env.push_var(x.clone(), a);
            let b = typecheck_term(prog, env, at, n);
            env.pop();
            b
        }
        CsTerm::Proj(i, v) => match typecheck_value(prog, env, at, v)? {
            CsType::Pair(a, b) => Ok(if *i == 1 { *a } else { *b }),
            other => err(format!("projection of a non-pair of type {other}")),
        },
        CsTerm::App(f, w) => {
            let (arg, loc, res) = closure_fun(typecheck_value(prog, env, at, f)?)?;
            if &loc != at {
                return err(format!(
                    "local application of a function located at {loc} while running at {at}"
                ));
            }
            let a = typecheck_value(prog, env, at, w)?;
            expect_eq(&a, &arg, "argument type mismatch")?;
            Ok(res)
        }
        CsTerm::TApp(v, b) => {
            env.check_type(b)?;
            relocatable(b)?;
            match typecheck_value(prog, env, at, v)? {
                CsType::ForallTy(a, body) => Ok(body.subst_ty(&a, b)),
                other => err(format!("type application of a non-quantified type {other}")),
            }
        }
        CsTerm::LApp(v, loc) => {
            env.check_loc(loc)?;
            match typecheck_value(prog, env, at, v)? {
                CsType::Clo(inner) => match *inner {
                    CsType::ForallLoc(l, body) => Ok(body.subst_loc(&l, loc)),
                    other => err(format!(
                        "location application of a non-quantified closure Clo({other})"
                    )),
                },
                other => err(format!("location application of a non-closure of type {other}")),
            }
        }
    }
}

fn closure_fun(ty: CsType) -> Result<(CsType, Loc, CsType), CsTypeError> {
    match ty {
        CsType::Clo(inner) => match *inner {
            CsType::Fun(a, loc, b) => Ok((*a, loc, *b)),
            other => err(format!("applying a non-function closure Clo({other})")),
        },
        other => err(format!("applying a non-function of type {other}")),
    }
}

fn monadic(ty: CsType, what: &str) -> Result<CsType, CsTypeError> {
    match ty {
        CsType::Monad(a) => Ok(*a),
        other => err(format!("{what} must be a computation, found {other}")),
    }
}

pub fn typecheck_value(
    prog: &CsProgram,
    env: &mut CsEnv,
    at: &Loc,
    value: &CsValue,
) -> Result<CsType, CsTypeError> {
    match value {
        CsValue::Var(x) => env.lookup(x).cloned().ok_or_else(|| CsTypeError {
            message: format!("unbound variable {x}"),
        }),
        CsValue::Int(_) => Ok(CsType::INT),
        CsValue::Unit => Ok(CsType::UNIT),
        CsValue::Pair(a, b) => Ok(CsType::pair(
            typecheck_value(prog, env, at, a)?,
            typecheck_value(prog, env, at, b)?,
        )),
        CsValue::Clo(values, code_ref) => typecheck_closure(prog, env, at, values, code_ref),
        CsValue::TAbs(a, body) => {
            let fresh = env.fresh_loc();
            env.push_ty(a.clone());
            env.push_loc(fresh.clone());
            let ty = typecheck_value(prog, env, &Loc::Var(fresh), body);
            env.pop();
            env.pop();
            Ok(CsType::forall_ty(a.clone(), ty?))
        }
        CsValue::UnitM(v) => {
            let a = typecheck_value(prog, env, at, v)?;
            relocatable(&a)?;
            Ok(CsType::monad(a))
        }
        CsValue::Do(x, m, n) => {
            let a = monadic(typecheck_term(prog, env, at, m)?, "the bound term of do")?;
            env.push_var(x.clone(), a);
            let b = typecheck_term(prog, env, at, n);
            env.pop();
            let b = monadic(b?, "the body of do")?;
            Ok(CsType::monad(b))
        }
        CsValue::Req(f, w) => {
            if at != &Loc::Client {
                return err(format!("req outside client (running at {at})"));
            }
            remote(prog, env, at, f, w, &Loc::Server)
        }
        CsValue::Call(f, w) => {
            if at != &Loc::Server {
                return err(format!("call outside server (running at {at})"));
            }
            remote(prog, env, at, f, w, &Loc::Client)
        }
        CsValue::Gen(loc, f, w) => {
            env.check_loc(loc)?;
            remote(prog, env, at, f, w, loc)
        }
    }
}

/// The shared premises of req, call and gen: a closure located at `target`
/// returning a computation, applied to a relocatable argument.
fn remote(
    prog: &CsProgram,
    env: &mut CsEnv,
    at: &Loc,
    f: &CsValue,
    w: &CsValue,
    target: &Loc,
) -> Result<CsType, CsTypeError> {
    let (arg, loc, res) = closure_fun(typecheck_value(prog, env, at, f)?)?;
    if &loc != target {
        return err(format!(
            "remote application expects a function located at {target}, found one at {loc}"
        ));
    }
    let a = typecheck_value(prog, env, at, w)?;
    expect_eq(&a, &arg, "argument type mismatch")?;
    relocatable(&a)?;
    let res = monadic(res, "the result of a remote function")?;
    Ok(CsType::monad(res))
}

fn typecheck_closure(
    prog: &CsProgram,
    env: &mut CsEnv,
    at: &Loc,
    values: &[CsValue],
    code_ref: &CodeRef,
) -> Result<CsType, CsTypeError> {
    let Some(code) = prog.codes.get(&code_ref.name) else {
        return err(format!("unknown code {}", code_ref.name));
    };
    if code.loc_params.len() != code_ref.loc_args.len()
        || code.ty_params.len() != code_ref.ty_args.len()
        || code.env.len() != values.len()
    {
        return err(format!(
            "closure over {} has the wrong number of arguments",
            code_ref.name
        ));
    }
    for loc in &code_ref.loc_args {
        env.check_loc(loc)?;
    }
    for ty in &code_ref.ty_args {
        env.check_type(ty)?;
        relocatable(ty)?;
    }
    for ((_, zty), w) in code.env.iter().zip(values) {
        let expected = code.instantiate_type(zty, &code_ref.loc_args, &code_ref.ty_args);
        relocatable(&expected)?;
        let found = typecheck_value(prog, env, at, w)?;
        expect_eq(&found, &expected, "captured value type mismatch")?;
    }
    Ok(CsType::clo(code.instantiate_type(
        &code.code_type(),
        &code_ref.loc_args,
        &code_ref.ty_args,
    )))
}

/// Where a code has to live given its open code.
fn expected_placement(open: &OpenCode) -> Placement {
    match open {
        OpenCode::Lam { loc: Loc::Client, .. } => Placement::Client,
        OpenCode::Lam { loc: Loc::Server, .. } => Placement::Server,
        OpenCode::Lam { .. } | OpenCode::LAbs { .. } => Placement::Common,
    }
}

fn placement_name(p: Placement) -> &'static str {
    match p {
        Placement::Client => "client-runnable",
        Placement::Server => "server-runnable",
        Placement::Common => "common",
    }
}

/// Checks every code against its declared type and the map decomposition.
pub fn check_codes(prog: &CsProgram) -> Result<(), CsTypeError> {
    for (name, code) in &prog.codes {
        let want = expected_placement(&code.open);
        if code.placement != want {
            let located = match &code.open {
                OpenCode::Lam { loc, .. } => loc.to_string(),
                OpenCode::LAbs { .. } => "every location".to_string(),
            };
            return err(format!(
                "code {name} located at {located} referenced as {}",
                placement_name(code.placement)
            ));
        }
        let mut env = CsEnv::new();
        for l in &code.loc_params {
            env.push_loc(l.clone());
        }
        for a in &code.ty_params {
            env.push_ty(a.clone());
        }
        for (z, ty) in &code.env {
            env.check_type(ty).map_err(|e| in_code(name, e))?;
            env.push_var(z.clone(), ty.clone());
        }
        let checked = match &code.open {
            OpenCode::Lam {
                param,
                param_ty,
                loc,
                res_ty,
                body,
            } => {
                env.check_type(param_ty)?;
                env.check_loc(loc)?;
                env.push_var(param.clone(), param_ty.clone());
                typecheck_term(prog, &mut env, loc, body)
                    .and_then(|found| expect_eq(&found, res_ty, "code result type mismatch"))
            }
            OpenCode::LAbs { var, body_ty, body } => {
                env.push_loc(var.clone());
                let fresh = env.fresh_loc();
                env.push_loc(fresh.clone());
                typecheck_value(prog, &mut env, &Loc::Var(fresh), body)
                    .and_then(|found| expect_eq(&found, body_ty, "code body type mismatch"))
            }
        };
        checked.map_err(|e| in_code(name, e))?;
    }
    Ok(())
}

fn in_code(name: &str, e: CsTypeError) -> CsTypeError {
    CsTypeError {
        message: format!("in code {name}: {}", e.message),
    }
}

/// Well-formedness of the maps plus `∅ ⊢_c main : T A`; returns `T A`.
pub fn typecheck_program(prog: &CsProgram) -> Result<CsType, CsTypeError> {
    check_codes(prog)?;
    let ty = typecheck_term(prog, &mut CsEnv::new(), &Loc::Client, &prog.main)?;
    if !matches!(ty, CsType::Monad(_)) {
        return err(format!("main must be a computation, found {ty}"));
    }
    Ok(ty)
}

/// Types `x : input ⊢_at E[x]`, which must be a computation.
fn type_context(prog: &CsProgram, at: Side, frames: &[Frame], input: &CsType) -> Result<CsType, CsTypeError> {
    let hole = "[]";
    let term = Frame::plug_all(frames, CsTerm::Val(CsValue::var(hole)));
    let mut env = CsEnv::new();
    env.push_var(hole, input.clone());
    let ty = typecheck_term(prog, &mut env, &Loc::from(at), &term)?;
    match ty {
        CsType::Monad(_) => Ok(ty),
        other => err(format!(
            "stacked context must return a computation, found {other}"
        )),
    }
}

/// `view ⊢ (Δc, Δs) : input ⇒ B`. The view is the side that just handed
/// control over; the next context to resume sits on the other side's stack.
fn type_stacks(
    prog: &CsProgram,
    view: Side,
    client: &[Vec<Frame>],
    server: &[Vec<Frame>],
    input: CsType,
) -> Result<CsType, CsTypeError> {
    if client.is_empty() && server.is_empty() {
        return Ok(input);
    }
    match view {
        Side::Client => {
            let Some((top, rest)) = server.split_last() else {
                return err("unbalanced stacks");
            };
            let next = type_context(prog, Side::Server, top, &input)?;
            type_stacks(prog, Side::Server, client, rest, next)
        }
        Side::Server => {
            let Some((top, rest)) = client.split_last() else {
                return err("unbalanced stacks");
            };
            let next = type_context(prog, Side::Client, top, &input)?;
            type_stacks(prog, Side::Client, rest, server, next)
        }
    }
}

/// `⊢ conf : B`.
pub fn typecheck_config(prog: &CsProgram, conf: &Configuration) -> Result<CsType, CsTypeError> {
    let term = conf.active_term();
    let ty = typecheck_term(prog, &mut CsEnv::new(), &Loc::from(conf.active), &term)?;
    if !matches!(ty, CsType::Monad(_)) {
        return err(format!("running term must be a computation, found {ty}"));
    }
    type_stacks(prog, conf.active, &conf.client_stack, &conf.server_stack, ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::syntax::Code;
    use indexmap::IndexMap;

    fn f3_program() -> CsProgram {
        let mut codes = IndexMap::new();
        codes.insert(
            "f3".to_string(),
            Code {
                loc_params: vec![],
                ty_params: vec![],
                env: vec![],
                open: OpenCode::Lam {
                    param: "x".into(),
                    param_ty: CsType::INT,
                    loc: Loc::Client,
                    res_ty: CsType::monad(CsType::INT),
                    body: CsTerm::Val(CsValue::unit_m(CsValue::var("x"))),
                },
                placement: Placement::Client,
            },
        );
        CsProgram {
            main: CsTerm::Val(CsValue::unit_m(CsValue::Int(0))),
            codes,
        }
    }

    #[test]
    fn unit_at_client() {
        let prog = f3_program();
        let ty = typecheck_value(
            &prog,
            &mut CsEnv::new(),
            &Loc::Client,
            &CsValue::unit_m(CsValue::Int(1)),
        )
        .unwrap();
        assert_eq!(ty, CsType::monad(CsType::INT));
    }

    #[test]
    fn gen_under_location_variable() {
        let prog = f3_program();
        let mut env = CsEnv::new();
        env.push_loc("l");
        let g_ty = CsType::clo(CsType::fun(CsType::INT, Loc::Client, CsType::monad(CsType::INT)));
        env.push_var("g", g_ty);
        let v = CsValue::gen(Loc::Client, CsValue::var("g"), CsValue::Int(1));
        let ty = typecheck_value(&prog, &mut env, &Loc::var("l"), &v).unwrap();
        assert_eq!(ty, CsType::monad(CsType::INT));
    }

    #[test]
    fn req_at_server_is_rejected() {
        let prog = f3_program();
        let v = CsValue::req(CsValue::Clo(vec![], CodeRef::plain("f3")), CsValue::Int(0));
        let e = typecheck_value(&prog, &mut CsEnv::new(), &Loc::Server, &v).unwrap_err();
        assert!(e.message.contains("req outside client"), "{e}");
    }

    #[test]
    fn misplaced_code_is_reported() {
        let mut prog = f3_program();
        prog.codes["f3"].placement = Placement::Server;
        let e = check_codes(&prog).unwrap_err();
        assert!(
            e.message
                .contains("located at client referenced as server-runnable"),
            "{e}"
        );
    }

    #[test]
    fn configuration_stacks_must_alternate() {
        let prog = f3_program();
        let mut conf = Configuration::initial(CsTerm::Val(CsValue::unit_m(CsValue::Int(1))));
        assert_eq!(
            typecheck_config(&prog, &conf).unwrap(),
            CsType::monad(CsType::INT)
        );
        conf.client_stack.push(Vec::new());
        let e = typecheck_config(&prog, &conf).unwrap_err();
        assert_eq!(e.message, "unbalanced stacks");
    }

    #[test]
    fn displayed_call_configuration_is_well_formed() {
        let prog = f3_program();
        let mut conf = Configuration::initial(CsTerm::App(
            CsValue::Clo(vec![], CodeRef::plain("f3")),
            CsValue::Int(1),
        ));
        conf.client_stack.push(Vec::new());
        conf.server_stack.push(Vec::new());
        assert_eq!(
            typecheck_config(&prog, &conf).unwrap(),
            CsType::monad(CsType::INT)
        );
    }
}
