//! Monomorphisation: eliminates location polymorphism by duplication.
//!
//! A location abstraction becomes the pair of its client and server
//! specializations, and a location application becomes the matching
//! projection:
//!
//! ```text
//! Λl.V      ↦  (mono(V[c/l]), mono(V[s/l]))
//! ∀l.A      ↦  mono(A[c/l]) × mono(A[s/l])
//! M[client] ↦  fst mono(M)
//! M[server] ↦  snd mono(M)
//! ```
//!
//! The pass runs outside-in, so by the time an application at a location
//! variable is reached the enclosing abstraction has already replaced the
//! variable with a constant. Nested abstractions therefore multiply: `n`
//! nested binders yield `2^n` copies of the body.

use thiserror::Error;

use crate::loc::Loc;
use crate::rpc::syntax::{Def, RpcTerm, RpcType, SourceProgram, TermKind};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("internal error during monomorphisation: {0}")]
pub struct MonoError(pub String);

pub fn mono_type(ty: &RpcType) -> RpcType {
    match ty {
        RpcType::Base(_) | RpcType::Var(_) => ty.clone(),
        RpcType::Fun(a, loc, b) => RpcType::fun(mono_type(a), loc.clone(), mono_type(b)),
        RpcType::Pair(a, b) => RpcType::pair(mono_type(a), mono_type(b)),
        RpcType::ForallTy(a, body) => RpcType::forall_ty(a.clone(), mono_type(body)),
        RpcType::ForallLoc(l, body) => RpcType::pair(
            mono_type(&body.subst_loc(l, &Loc::Client)),
            mono_type(&body.subst_loc(l, &Loc::Server)),
        ),
    }
}

pub fn mono_term(term: &RpcTerm) -> Result<RpcTerm, MonoError> {
    let kind = match &term.kind {
        TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => term.kind.clone(),
        TermKind::Lam {
            loc,
            param,
            annot,
            body,
        } => {
            if let Loc::Var(l) = loc {
                return Err(MonoError(format!("lambda at unspecialized location {l}")));
            }
            TermKind::Lam {
                loc: loc.clone(),
                param: param.clone(),
                annot: mono_type(annot),
                body: Box::new(mono_term(body)?),
            }
        }
        TermKind::TAbs { var, body } => TermKind::TAbs {
            var: var.clone(),
            body: Box::new(mono_term(body)?),
        },
        TermKind::LAbs { var, body } => TermKind::Pair(
            Box::new(mono_term(&body.subst_loc(var, &Loc::Client))?),
            Box::new(mono_term(&body.subst_loc(var, &Loc::Server))?),
        ),
        TermKind::App(f, a) => TermKind::App(Box::new(mono_term(f)?), Box::new(mono_term(a)?)),
        TermKind::TApp(f, ty) => TermKind::TApp(Box::new(mono_term(f)?), mono_type(ty)),
        TermKind::LApp(f, loc) => {
            let index = match loc {
                Loc::Client => 1,
                Loc::Server => 2,
                Loc::Var(l) => {
                    return Err(MonoError(format!(
                        "location application at unbound location variable {l}"
                    )))
                }
            };
            TermKind::Proj(index, Box::new(mono_term(f)?))
        }
        TermKind::Pair(l, r) => TermKind::Pair(Box::new(mono_term(l)?), Box::new(mono_term(r)?)),
        TermKind::Proj(i, t) => TermKind::Proj(*i, Box::new(mono_term(t)?)),
    };
    Ok(RpcTerm::with_span(kind, term.span))
}

/// Monomorphises every definition and `main`, keeping the file structure.
pub fn monomorphise(program: &SourceProgram) -> Result<SourceProgram, MonoError> {
    let defs = program
        .defs
        .iter()
        .map(|d| {
            Ok(Def {
                name: d.name.clone(),
                declared: mono_type(&d.declared),
                body: mono_term(&d.body)?,
                span: d.span,
            })
        })
        .collect::<Result<Vec<_>, MonoError>>()?;
    Ok(SourceProgram {
        defs,
        main: mono_term(&program.main)?,
        main_type: program.main_type.as_ref().map(mono_type),
    })
}

/// True when the term mentions no location abstraction, application or
/// location variable.
pub fn is_monomorphic(term: &RpcTerm) -> bool {
    term.subterms().iter().all(|t| match &t.kind {
        TermKind::LAbs { .. } | TermKind::LApp(..) => false,
        TermKind::Lam { loc, annot, .. } => !loc.is_var() && type_is_monomorphic(annot),
        TermKind::TApp(_, ty) => type_is_monomorphic(ty),
        _ => true,
    })
}

pub fn type_is_monomorphic(ty: &RpcType) -> bool {
    match ty {
        RpcType::Base(_) | RpcType::Var(_) => true,
        RpcType::Fun(a, loc, b) => !loc.is_var() && type_is_monomorphic(a) && type_is_monomorphic(b),
        RpcType::Pair(a, b) => type_is_monomorphic(a) && type_is_monomorphic(b),
        RpcType::ForallTy(_, body) => type_is_monomorphic(body),
        RpcType::ForallLoc(..) => false,
    }
}
