//! Syntax-directed type synthesis for the source calculus.

use std::collections::HashSet;

use thiserror::Error;

use crate::loc::Loc;
use crate::names::rename_away;
use crate::rpc::syntax::{RpcTerm, RpcType, SourceProgram, Span, TermKind};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct TypeError {
    pub message: String,
    pub span: Span,
}

fn err<T>(span: Span, message: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError {
        message: message.into(),
        span,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entry {
    Loc(String),
    Ty(String),
    Var(String, RpcType),
}

/// An ordered typing environment. Lookups scan from the innermost binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    entries: Vec<Entry>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn push_loc(&mut self, l: impl Into<String>) {
        self.entries.push(Entry::Loc(l.into()));
    }

    pub fn push_ty(&mut self, a: impl Into<String>) {
        self.entries.push(Entry::Ty(a.into()));
    }

    pub fn push_var(&mut self, x: impl Into<String>, ty: RpcType) {
        self.entries.push(Entry::Var(x.into(), ty));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn lookup(&self, x: &str) -> Option<&RpcType> {
        self.entries.iter().rev().find_map(|e| match e {
            Entry::Var(y, ty) if y == x => Some(ty),
            _ => None,
        })
    }

    pub fn has_loc(&self, l: &str) -> bool {
        self.entries.iter().any(|e| matches!(e, Entry::Loc(m) if m == l))
    }

    pub fn has_ty(&self, a: &str) -> bool {
        self.entries.iter().any(|e| matches!(e, Entry::Ty(b) if b == a))
    }

    /// Every name the environment mentions, bound or free in stored types.
    pub fn all_names(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        for e in &self.entries {
            match e {
                Entry::Loc(l) => {
                    out.insert(l.clone());
                }
                Entry::Ty(a) => {
                    out.insert(a.clone());
                }
                Entry::Var(x, ty) => {
                    out.insert(x.clone());
                    out.extend(ty.free_ty_vars());
                    out.extend(ty.free_loc_vars());
                }
            }
        }
        out
    }

    pub fn check_loc(&self, loc: &Loc, span: Span) -> Result<(), TypeError> {
        match loc {
            Loc::Var(l) if !self.has_loc(l) => err(span, format!("unbound location variable {l}")),
            _ => Ok(()),
        }
    }

    /// Checks that every free type and location variable of `ty` is bound.
    pub fn check_type(&self, ty: &RpcType, span: Span) -> Result<(), TypeError> {
        let mut ftv: Vec<_> = ty.free_ty_vars().into_iter().collect();
        ftv.sort();
        if let Some(a) = ftv.iter().find(|a| !self.has_ty(a)) {
            return err(span, format!("unbound type variable {a}"));
        }
        let mut flv: Vec<_> = ty.free_loc_vars().into_iter().collect();
        flv.sort();
        if let Some(l) = flv.iter().find(|l| !self.has_loc(l)) {
            return err(span, format!("unbound location variable {l}"));
        }
        Ok(())
    }
}

/// Synthesizes the type of `term` evaluated at `at` under `env`.
pub fn typecheck(env: &TypeEnv, at: &Loc, term: &RpcTerm) -> Result<RpcType, TypeError> {
    let mut env = env.clone();
    env.check_loc(at, term.span)?;
    synth(&mut env, at, term)
}

/// Types a whole file: each definition against its declared type, then
/// `main`, returning the type of `main` at `at`.
pub fn typecheck_program(program: &SourceProgram, at: &Loc) -> Result<RpcType, TypeError> {
    let mut env = TypeEnv::new();
    for def in &program.defs {
        env.check_type(&def.declared, def.span)?;
        // Definitions are location-independent values in practice, but a
        // non-value body is typed at the same location as `main`.
        let ty = synth(&mut env, at, &def.body)?;
        if !ty.alpha_eq(&def.declared) {
            return err(
                def.span,
                format!(
                    "definition {} declared as {} but has type {}",
                    def.name, def.declared, ty
                ),
            );
        }
        env.push_var(def.name.clone(), def.declared.clone());
    }
    let ty = synth(&mut env, at, &program.main)?;
    if let Some(declared) = &program.main_type {
        if !ty.alpha_eq(declared) {
            return err(
                program.main.span,
                format!("main declared as {declared} but has type {ty}"),
            );
        }
    }
    Ok(ty)
}

fn synth(env: &mut TypeEnv, at: &Loc, term: &RpcTerm) -> Result<RpcType, TypeError> {
    let span = term.span;
    match &term.kind {
        TermKind::Var(x) => match env.lookup(x) {
            Some(ty) => Ok(ty.clone()),
            None => err(span, format!("unbound variable {x}")),
        },
        TermKind::Int(_) => Ok(RpcType::INT),
        TermKind::Unit => Ok(RpcType::UNIT),
        TermKind::Lam {
            loc,
            param,
            annot,
            body,
        } => {
            env.check_loc(loc, span)?;
            env.check_type(annot, span)?;
            env.push_var(param.clone(), annot.clone());
            let res = synth(env, loc, body);
            env.pop();
            Ok(RpcType::fun(annot.clone(), loc.clone(), res?))
        }
        TermKind::TAbs { var, body } => {
            if !body.is_value() {
                return err(span, "type abstraction over a non-value body");
            }
            // A binder that is already in scope is renamed so that types
            // stored in the environment keep referring to the outer one.
            let (var, body) = if env.has_ty(var) {
                let fresh = rename_away(
                    var,
                    &env.all_names().union(&body.free_ty_vars()).cloned().collect(),
                );
                (fresh.clone(), body.subst_ty(var, &RpcType::Var(fresh)))
            } else {
                (var.clone(), (**body).clone())
            };
            env.push_ty(var.clone());
            let res = synth(env, at, &body);
            env.pop();
            Ok(RpcType::forall_ty(var, res?))
        }
        TermKind::LAbs { var, body } => {
            if !body.is_value() {
                return err(span, "location abstraction over a non-value body");
            }
            let clash = env.has_loc(var) || at.var_name() == Some(var.as_str());
            let (var, body) = if clash {
                let mut avoid = env.all_names();
                avoid.extend(body.free_loc_vars());
                let fresh = rename_away(var, &avoid);
                (fresh.clone(), body.subst_loc(var, &Loc::Var(fresh)))
            } else {
                (var.clone(), (**body).clone())
            };
            env.push_loc(var.clone());
            let res = synth(env, at, &body);
            env.pop();
            Ok(RpcType::forall_loc(var, res?))
        }
        TermKind::App(fun, arg) => {
            let fty = synth(env, at, fun)?;
            let (param, res) = match fty {
                RpcType::Fun(param, _, res) => (param, res),
                other => return err(fun.span, format!("applying a non-function of type {other}")),
            };
            let aty = synth(env, at, arg)?;
            if !aty.alpha_eq(&param) {
                return err(
                    arg.span,
                    format!("argument type mismatch: expected {param}, found {aty}"),
                );
            }
            Ok(*res)
        }
        TermKind::TApp(fun, ty) => {
            env.check_type(ty, span)?;
            match synth(env, at, fun)? {
                RpcType::ForallTy(a, body) => Ok(body.subst_ty(&a, ty)),
                other => err(
                    fun.span,
                    format!("type application of a non-quantified type {other}"),
                ),
            }
        }
        TermKind::LApp(fun, loc) => {
            env.check_loc(loc, span)?;
            match synth(env, at, fun)? {
                RpcType::ForallLoc(l, body) => Ok(body.subst_loc(&l, loc)),
                other => err(
                    fun.span,
                    format!("location application of a non-quantified type {other}"),
                ),
            }
        }
        TermKind::Pair(l, r) => {
            let lt = synth(env, at, l)?;
            let rt = synth(env, at, r)?;
            Ok(RpcType::pair(lt, rt))
        }
        TermKind::Proj(i, t) => match synth(env, at, t)? {
            RpcType::Pair(a, b) => Ok(if *i == 1 { *a } else { *b }),
            other => err(t.span, format!("projection of a non-pair of type {other}")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running_example() -> RpcTerm {
        let g_ty = RpcType::fun(RpcType::INT, Loc::Client, RpcType::INT);
        let inner = RpcTerm::lam(
            Loc::var("l"),
            "g",
            g_ty,
            RpcTerm::app(RpcTerm::var("g"), RpcTerm::int(1)),
        );
        let poly = RpcTerm::labs("l", inner);
        let id = RpcTerm::lam(Loc::Client, "x", RpcType::INT, RpcTerm::var("x"));
        RpcTerm::app(RpcTerm::lapp(poly, Loc::Server), id)
    }

    #[test]
    fn running_example_has_int() {
        let ty = typecheck(&TypeEnv::new(), &Loc::Client, &running_example()).unwrap();
        assert_eq!(ty, RpcType::INT);
    }

    #[test]
    fn lambda_type_ignores_ambient_location() {
        let id = RpcTerm::lam(Loc::Client, "x", RpcType::INT, RpcTerm::var("x"));
        let ty = typecheck(&TypeEnv::new(), &Loc::Server, &id).unwrap();
        assert_eq!(ty, RpcType::fun(RpcType::INT, Loc::Client, RpcType::INT));
    }

    #[test]
    fn applying_an_integer_fails() {
        let e = typecheck(
            &TypeEnv::new(),
            &Loc::Client,
            &RpcTerm::app(RpcTerm::int(1), RpcTerm::int(2)),
        )
        .unwrap_err();
        assert!(e.message.contains("applying a non-function"), "{e}");
    }

    #[test]
    fn unbound_names_are_reported() {
        let e = typecheck(&TypeEnv::new(), &Loc::Client, &RpcTerm::var("y")).unwrap_err();
        assert!(e.message.contains("unbound variable y"));
        let lam = RpcTerm::lam(Loc::var("l"), "x", RpcType::INT, RpcTerm::var("x"));
        let e = typecheck(&TypeEnv::new(), &Loc::Client, &lam).unwrap_err();
        assert!(e.message.contains("unbound location variable l"));
        let lam = RpcTerm::lam(Loc::Client, "x", RpcType::Var("a".into()), RpcTerm::var("x"));
        let e = typecheck(&TypeEnv::new(), &Loc::Client, &lam).unwrap_err();
        assert!(e.message.contains("unbound type variable a"));
    }

    #[test]
    fn abstractions_require_value_bodies() {
        let t = RpcTerm::tabs("a", RpcTerm::app(RpcTerm::int(1), RpcTerm::int(2)));
        let e = typecheck(&TypeEnv::new(), &Loc::Client, &t).unwrap_err();
        assert!(e.message.contains("non-value"));
    }

    #[test]
    fn shadowed_type_binder_keeps_outer_meaning() {
        // [a]. \(x:a)@client. [a]. \(y:a)@client. x   : ∀a. a -> ∀a'. a' -> a
        let inner = RpcTerm::tabs(
            "a",
            RpcTerm::lam(Loc::Client, "y", RpcType::Var("a".into()), RpcTerm::var("x")),
        );
        let t = RpcTerm::tabs(
            "a",
            RpcTerm::lam(Loc::Client, "x", RpcType::Var("a".into()), inner),
        );
        let ty = typecheck(&TypeEnv::new(), &Loc::Client, &t).unwrap();
        let a = || RpcType::Var("a".into());
        let b = || RpcType::Var("b".into());
        let expected = RpcType::forall_ty(
            "a",
            RpcType::fun(
                a(),
                Loc::Client,
                RpcType::forall_ty("b", RpcType::fun(b(), Loc::Client, a())),
            ),
        );
        assert!(ty.alpha_eq(&expected), "{ty}");
    }

    #[test]
    fn type_application_substitutes() {
        let id = RpcTerm::tabs(
            "a",
            RpcTerm::lam(Loc::Server, "x", RpcType::Var("a".into()), RpcTerm::var("x")),
        );
        let ty = typecheck(&TypeEnv::new(), &Loc::Client, &RpcTerm::tapp(id, RpcType::INT)).unwrap();
        assert_eq!(ty, RpcType::fun(RpcType::INT, Loc::Server, RpcType::INT));
    }
}
