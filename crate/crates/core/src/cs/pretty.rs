//! Printing for the client-server calculus: types, terms, codes and whole
//! programs.

use std::fmt::{self, Display, Write};

use crate::cs::syntax::{Code, CodeRef, CsProgram, CsTerm, CsType, CsValue, OpenCode};
use crate::loc::Side;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TyPrec {
    Top,
    Product,
    Atom,
}

fn write_type(f: &mut impl Write, ty: &CsType, prec: TyPrec) -> fmt::Result {
    let own = match ty {
        CsType::Base(_) | CsType::Var(_) | CsType::Clo(_) => TyPrec::Atom,
        CsType::Pair(..) => TyPrec::Product,
        // `T A` binds like a product operand: `T (A * B)`, `T Int * Int`.
        CsType::Monad(_) => TyPrec::Atom,
        CsType::Fun(..) | CsType::ForallTy(..) | CsType::ForallLoc(..) => TyPrec::Top,
    };
    if own < prec {
        f.write_char('(')?;
        write_type(f, ty, TyPrec::Top)?;
        return f.write_char(')');
    }
    match ty {
        CsType::Base(b) => write!(f, "{b}"),
        CsType::Var(a) => f.write_str(a),
        CsType::Clo(a) => {
            f.write_str("Clo(")?;
            write_type(f, a, TyPrec::Top)?;
            f.write_char(')')
        }
        CsType::Monad(a) => {
            f.write_str("T ")?;
            write_type(f, a, TyPrec::Atom)
        }
        CsType::Pair(a, b) => {
            write_type(f, a, TyPrec::Product)?;
            f.write_str(" * ")?;
            write_type(f, b, TyPrec::Atom)
        }
        CsType::Fun(a, loc, b) => {
            write_type(f, a, TyPrec::Product)?;
            write!(f, " -{loc}-> ")?;
            write_type(f, b, TyPrec::Top)
        }
        CsType::ForallTy(a, body) => {
            write!(f, "[{a}]. ")?;
            write_type(f, body, TyPrec::Top)
        }
        CsType::ForallLoc(l, body) => {
            write!(f, "{{{l}}}. ")?;
            write_type(f, body, TyPrec::Top)
        }
    }
}

impl Display for CsType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_type(f, self, TyPrec::Top)
    }
}

impl Display for CodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for l in &self.loc_args {
            write!(f, "{{{l}}}")?;
        }
        for a in &self.ty_args {
            write!(f, "[{a}]")?;
        }
        Ok(())
    }
}

/// Values that need parentheses when they appear as an operand.
fn is_open_ended(v: &CsValue) -> bool {
    matches!(v, CsValue::TAbs(..) | CsValue::Do(..))
}

fn write_operand(f: &mut fmt::Formatter<'_>, v: &CsValue) -> fmt::Result {
    if is_open_ended(v) {
        write!(f, "({v})")
    } else {
        write!(f, "{v}")
    }
}

impl Display for CsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsValue::Var(x) => f.write_str(x),
            CsValue::Int(n) => write!(f, "{n}"),
            CsValue::Unit => f.write_str("()"),
            CsValue::Pair(a, b) => write!(f, "({a}, {b})"),
            CsValue::Clo(env, code) => {
                f.write_str("clo([")?;
                for (i, w) in env.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{w}")?;
                }
                write!(f, "], {code})")
            }
            CsValue::TAbs(a, body) => write!(f, "[{a}]. {body}"),
            CsValue::UnitM(v) => {
                f.write_str("unit ")?;
                write_operand(f, v)
            }
            CsValue::Do(x, m, n) => {
                write!(f, "do {x} <- ")?;
                if matches!(**m, CsTerm::Let(..) | CsTerm::Val(CsValue::Do(..))) {
                    write!(f, "({m})")?;
                } else {
                    write!(f, "{m}")?;
                }
                write!(f, "; {n}")
            }
            CsValue::Req(v, w) => write!(f, "req({v}, {w})"),
            CsValue::Call(v, w) => write!(f, "call({v}, {w})"),
            CsValue::Gen(loc, v, w) => write!(f, "gen({loc}, {v}, {w})"),
        }
    }
}

impl Display for CsTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsTerm::Val(v) => write!(f, "{v}"),
            CsTerm::Let(x, m, n) => {
                write!(f, "let {x} = ")?;
                if matches!(**m, CsTerm::Let(..)) {
                    write!(f, "({m})")?;
                } else {
                    write!(f, "{m}")?;
                }
                write!(f, " in {n}")
            }
            CsTerm::Proj(i, v) => {
                f.write_str(if *i == 1 { "fst " } else { "snd " })?;
                write_operand(f, v)
            }
            CsTerm::App(v, w) => {
                write_operand(f, v)?;
                write!(f, "({w})")
            }
            CsTerm::TApp(v, ty) => {
                write_operand(f, v)?;
                write!(f, " [{ty}]")
            }
            CsTerm::LApp(v, loc) => {
                write_operand(f, v)?;
                write!(f, " {{{loc}}}")
            }
        }
    }
}

/// One line per code: name, prefix, type, and body.
pub fn pretty_code(name: &str, code: &Code) -> String {
    let mut out = String::new();
    out.push_str(name);
    out.push_str(" {");
    out.push_str(&code.loc_params.join(" "));
    out.push_str("} [");
    out.push_str(&code.ty_params.join(" "));
    out.push_str("] (");
    for (i, (z, ty)) in code.env.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{z} : {ty}");
    }
    let _ = write!(out, ") : {} = ", code.code_type());
    match &code.open {
        OpenCode::Lam {
            param,
            param_ty,
            loc,
            body,
            ..
        } => {
            let _ = write!(out, "\\({param} : {param_ty}) @ {loc} . {body}");
        }
        OpenCode::LAbs { var, body, .. } => {
            let _ = write!(out, "{{{var}}}. {body}");
        }
    }
    out
}

/// The whole program: `main`, then the client and server function maps.
/// Common codes are listed under both maps.
pub fn pretty_cs_program(prog: &CsProgram) -> String {
    let mut out = format!("main = {}\n", prog.main);
    for side in [Side::Client, Side::Server] {
        let _ = writeln!(out, "\n{side}:");
        for (name, code) in prog.map(side) {
            let _ = writeln!(out, "  {}", pretty_code(name, code));
        }
    }
    out
}

impl Display for CsProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_cs_program(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loc::Loc;

    #[test]
    fn values_print_compactly() {
        let clo = CsValue::Clo(
            vec![],
            CodeRef {
                name: "f2".into(),
                loc_args: vec![Loc::Server],
                ty_args: vec![CsType::INT],
            },
        );
        assert_eq!(clo.to_string(), "clo([], f2{server}[Int])");
        let m = CsValue::do_(
            "h",
            CsTerm::LApp(CsValue::Clo(vec![], CodeRef::plain("f1")), Loc::Server),
            CsTerm::Val(CsValue::req(CsValue::var("h"), CsValue::Int(1))),
        );
        assert_eq!(m.to_string(), "do h <- clo([], f1) {server}; req(h, 1)");
    }

    #[test]
    fn types_print_with_monad_and_closures() {
        let ty = CsType::clo(CsType::fun(
            CsType::INT,
            Loc::var("l"),
            CsType::monad(CsType::INT),
        ));
        assert_eq!(ty.to_string(), "Clo(Int -l-> T Int)");
        let ty = CsType::monad(CsType::pair(CsType::INT, CsType::UNIT));
        assert_eq!(ty.to_string(), "T (Int * Unit)");
    }
}
