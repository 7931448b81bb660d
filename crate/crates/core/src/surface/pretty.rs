//! Pretty-printing back into the concrete syntax.
//!
//! The output re-parses to an equal tree: abstractions extend as far right
//! as possible, so they are parenthesized whenever something follows them,
//! and application arguments are always atoms.

use std::fmt::{self, Write};

use crate::rpc::syntax::{RpcTerm, RpcType, SourceProgram, TermKind};

pub fn pretty_term(term: &RpcTerm) -> String {
    let mut out = String::new();
    write_term(&mut out, term, Prec::Top).expect("writing to a String cannot fail");
    out
}

pub fn pretty_type(ty: &RpcType) -> String {
    ty.to_string()
}

pub fn pretty_program(program: &SourceProgram) -> String {
    if program.defs.is_empty() && program.main_type.is_none() {
        return pretty_term(&program.main) + "\n";
    }
    let mut out = String::new();
    for def in &program.defs {
        out.push_str(&format!(
            "{} : {}\n  = {} ;\n\n",
            def.name,
            def.declared,
            pretty_term(&def.body)
        ));
    }
    match &program.main_type {
        Some(ty) => out.push_str(&format!("main : {ty}\n  = {}\n", pretty_term(&program.main))),
        // Without a signature for main the definitions cannot be written
        // out; print the equivalent closed term instead.
        None => return pretty_term(&program.desugar()) + "\n",
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    /// Any term, including abstractions.
    Top,
    /// Head of an application chain: applications and projections.
    Head,
    /// Argument: atoms only.
    Atom,
}

fn write_term(out: &mut String, t: &RpcTerm, prec: Prec) -> fmt::Result {
    let own = match &t.kind {
        TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit | TermKind::Pair(..) => Prec::Atom,
        TermKind::App(..) | TermKind::TApp(..) | TermKind::LApp(..) | TermKind::Proj(..) => Prec::Head,
        TermKind::Lam { .. } | TermKind::TAbs { .. } | TermKind::LAbs { .. } => Prec::Top,
    };
    if own < prec {
        out.push('(');
        write_term(out, t, Prec::Top)?;
        out.push(')');
        return Ok(());
    }
    match &t.kind {
        TermKind::Var(x) => out.push_str(x),
        TermKind::Int(n) => write!(out, "{n}")?,
        TermKind::Unit => out.push_str("()"),
        TermKind::Pair(l, r) => {
            out.push('(');
            write_term(out, l, Prec::Top)?;
            out.push_str(", ");
            write_term(out, r, Prec::Top)?;
            out.push(')');
        }
        TermKind::Lam {
            loc,
            param,
            annot,
            body,
        } => {
            write!(out, "\\({param} : {annot}) @ {loc} . ")?;
            write_term(out, body, Prec::Top)?;
        }
        TermKind::TAbs { var, body } => {
            write!(out, "[{var}]. ")?;
            write_term(out, body, Prec::Top)?;
        }
        TermKind::LAbs { var, body } => {
            write!(out, "{{{var}}}. ")?;
            write_term(out, body, Prec::Top)?;
        }
        TermKind::App(f, a) => {
            write_term(out, f, Prec::Head)?;
            out.push(' ');
            write_term(out, a, Prec::Atom)?;
        }
        TermKind::TApp(f, ty) => {
            write_term(out, f, Prec::Head)?;
            write!(out, " [{ty}]")?;
        }
        TermKind::LApp(f, loc) => {
            write_term(out, f, Prec::Head)?;
            write!(out, " {{{loc}}}")?;
        }
        TermKind::Proj(i, p) => {
            out.push_str(if *i == 1 { "fst " } else { "snd " });
            write_term(out, p, Prec::Atom)?;
        }
    }
    Ok(())
}

impl fmt::Display for RpcTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_term(self))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TyPrec {
    Top,
    Product,
    Atom,
}

fn write_type(f: &mut impl Write, ty: &RpcType, prec: TyPrec) -> fmt::Result {
    let own = match ty {
        RpcType::Base(_) | RpcType::Var(_) => TyPrec::Atom,
        RpcType::Pair(..) => TyPrec::Product,
        RpcType::Fun(..) | RpcType::ForallTy(..) | RpcType::ForallLoc(..) => TyPrec::Top,
    };
    if own < prec {
        f.write_char('(')?;
        write_type(f, ty, TyPrec::Top)?;
        return f.write_char(')');
    }
    match ty {
        RpcType::Base(b) => write!(f, "{b}"),
        RpcType::Var(a) => f.write_str(a),
        RpcType::Pair(a, b) => {
            write_type(f, a, TyPrec::Product)?;
            f.write_str(" * ")?;
            write_type(f, b, TyPrec::Atom)
        }
        RpcType::Fun(a, loc, b) => {
            write_type(f, a, TyPrec::Product)?;
            write!(f, " -{loc}-> ")?;
            write_type(f, b, TyPrec::Top)
        }
        RpcType::ForallTy(a, body) => {
            write!(f, "[{a}]. ")?;
            write_type(f, body, TyPrec::Top)
        }
        RpcType::ForallLoc(l, body) => {
            write!(f, "{{{l}}}. ")?;
            write_type(f, body, TyPrec::Top)
        }
    }
}

impl fmt::Display for RpcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_type(f, self, TyPrec::Top)
    }
}
