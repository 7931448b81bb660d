//! Abstract syntax of the source calculus.

use std::collections::HashSet;
use std::fmt;

use crate::loc::Loc;
use crate::names::rename_away;

/// A line/column range in a source file. Lines and columns start at 1; the
/// default span (all zeros) marks synthesized nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: (u32, u32),
    pub end: (u32, u32),
}

impl Span {
    pub fn new(start: (u32, u32), end: (u32, u32)) -> Span {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn is_synthetic(&self) -> bool {
        *self == Span::default()
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}-{}:{}",
            self.start.0, self.start.1, self.end.0, self.end.1
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseType {
    Int,
    Unit,
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseType::Int => f.write_str("Int"),
            BaseType::Unit => f.write_str("Unit"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RpcType {
    Base(BaseType),
    Fun(Box<RpcType>, Loc, Box<RpcType>),
    Var(String),
    Pair(Box<RpcType>, Box<RpcType>),
    ForallTy(String, Box<RpcType>),
    ForallLoc(String, Box<RpcType>),
}

impl RpcType {
    pub const INT: RpcType = RpcType::Base(BaseType::Int);
    pub const UNIT: RpcType = RpcType::Base(BaseType::Unit);

    pub fn fun(arg: RpcType, loc: Loc, res: RpcType) -> RpcType {
        RpcType::Fun(Box::new(arg), loc, Box::new(res))
    }

    pub fn pair(l: RpcType, r: RpcType) -> RpcType {
        RpcType::Pair(Box::new(l), Box::new(r))
    }

    pub fn forall_ty(var: impl Into<String>, body: RpcType) -> RpcType {
        RpcType::ForallTy(var.into(), Box::new(body))
    }

    pub fn forall_loc(var: impl Into<String>, body: RpcType) -> RpcType {
        RpcType::ForallLoc(var.into(), Box::new(body))
    }

    pub fn free_ty_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_ftv(&mut Vec::new(), &mut out);
        out
    }

    fn collect_ftv(&self, bound: &mut Vec<String>, out: &mut HashSet<String>) {
        match self {
            RpcType::Base(_) => {}
            RpcType::Var(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            RpcType::Fun(a, _, b) | RpcType::Pair(a, b) => {
                a.collect_ftv(bound, out);
                b.collect_ftv(bound, out);
            }
            RpcType::ForallTy(a, body) => {
                bound.push(a.clone());
                body.collect_ftv(bound, out);
                bound.pop();
            }
            RpcType::ForallLoc(_, body) => body.collect_ftv(bound, out),
        }
    }

    pub fn free_loc_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_flv(&mut Vec::new(), &mut out);
        out
    }

    fn collect_flv(&self, bound: &mut Vec<String>, out: &mut HashSet<String>) {
        match self {
            RpcType::Base(_) | RpcType::Var(_) => {}
            RpcType::Fun(a, loc, b) => {
                if let Loc::Var(l) = loc {
                    if !bound.contains(l) {
                        out.insert(l.clone());
                    }
                }
                a.collect_flv(bound, out);
                b.collect_flv(bound, out);
            }
            RpcType::Pair(a, b) => {
                a.collect_flv(bound, out);
                b.collect_flv(bound, out);
            }
            RpcType::ForallTy(_, body) => body.collect_flv(bound, out),
            RpcType::ForallLoc(l, body) => {
                bound.push(l.clone());
                body.collect_flv(bound, out);
                bound.pop();
            }
        }
    }

    /// Capture-avoiding `self[to/name]` for a type variable.
    pub fn subst_ty(&self, name: &str, to: &RpcType) -> RpcType {
        match self {
            RpcType::Base(_) => self.clone(),
            RpcType::Var(a) if a == name => to.clone(),
            RpcType::Var(_) => self.clone(),
            RpcType::Fun(a, loc, b) => RpcType::fun(a.subst_ty(name, to), loc.clone(), b.subst_ty(name, to)),
            RpcType::Pair(a, b) => RpcType::pair(a.subst_ty(name, to), b.subst_ty(name, to)),
            RpcType::ForallTy(a, _) if a == name => self.clone(),
            RpcType::ForallTy(a, body) => {
                let ftv = to.free_ty_vars();
                if ftv.contains(a) {
                    let mut avoid = ftv;
                    avoid.extend(body.free_ty_vars());
                    avoid.insert(name.to_string());
                    let fresh = rename_away(a, &avoid);
                    let body = body.subst_ty(a, &RpcType::Var(fresh.clone()));
                    RpcType::forall_ty(fresh, body.subst_ty(name, to))
                } else {
                    RpcType::forall_ty(a.clone(), body.subst_ty(name, to))
                }
            }
            RpcType::ForallLoc(l, body) => {
                let flv = to.free_loc_vars();
                if flv.contains(l) {
                    let mut avoid = flv;
                    avoid.extend(body.free_loc_vars());
                    let fresh = rename_away(l, &avoid);
                    let body = body.subst_loc(l, &Loc::Var(fresh.clone()));
                    RpcType::forall_loc(fresh, body.subst_ty(name, to))
                } else {
                    RpcType::forall_loc(l.clone(), body.subst_ty(name, to))
                }
            }
        }
    }

    /// Capture-avoiding `self[to/name]` for a location variable.
    pub fn subst_loc(&self, name: &str, to: &Loc) -> RpcType {
        match self {
            RpcType::Base(_) | RpcType::Var(_) => self.clone(),
            RpcType::Fun(a, loc, b) => {
                RpcType::fun(a.subst_loc(name, to), loc.subst(name, to), b.subst_loc(name, to))
            }
            RpcType::Pair(a, b) => RpcType::pair(a.subst_loc(name, to), b.subst_loc(name, to)),
            RpcType::ForallTy(a, body) => RpcType::forall_ty(a.clone(), body.subst_loc(name, to)),
            RpcType::ForallLoc(l, _) if l == name => self.clone(),
            RpcType::ForallLoc(l, body) => {
                if to.var_name() == Some(l.as_str()) {
                    let mut avoid = body.free_loc_vars();
                    avoid.insert(l.clone());
                    avoid.insert(name.to_string());
                    let fresh = rename_away(l, &avoid);
                    let body = body.subst_loc(l, &Loc::Var(fresh.clone()));
                    RpcType::forall_loc(fresh, body.subst_loc(name, to))
                } else {
                    RpcType::forall_loc(l.clone(), body.subst_loc(name, to))
                }
            }
        }
    }

    /// Equality up to renaming of bound type and location variables.
    pub fn alpha_eq(&self, other: &RpcType) -> bool {
        alpha_eq(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

// Bound-variable environments pair up binders of the two sides by depth.
type Binders = Vec<(String, String)>;

fn lookup_pair(env: &Binders, left: &str, right: &str) -> Option<bool> {
    for (l, r) in env.iter().rev() {
        if l == left || r == right {
            return Some(l == left && r == right);
        }
    }
    None
}

fn loc_alpha_eq(a: &Loc, b: &Loc, locs: &Binders) -> bool {
    match (a, b) {
        (Loc::Var(x), Loc::Var(y)) => lookup_pair(locs, x, y).unwrap_or(x == y),
        _ => a == b,
    }
}

fn alpha_eq(a: &RpcType, b: &RpcType, tys: &mut Binders, locs: &mut Binders) -> bool {
    match (a, b) {
        (RpcType::Base(x), RpcType::Base(y)) => x == y,
        (RpcType::Var(x), RpcType::Var(y)) => lookup_pair(tys, x, y).unwrap_or(x == y),
        (RpcType::Fun(a1, l1, b1), RpcType::Fun(a2, l2, b2)) => {
            loc_alpha_eq(l1, l2, locs) && alpha_eq(a1, a2, tys, locs) && alpha_eq(b1, b2, tys, locs)
        }
        (RpcType::Pair(a1, b1), RpcType::Pair(a2, b2)) => {
            alpha_eq(a1, a2, tys, locs) && alpha_eq(b1, b2, tys, locs)
        }
        (RpcType::ForallTy(x, b1), RpcType::ForallTy(y, b2)) => {
            tys.push((x.clone(), y.clone()));
            let eq = alpha_eq(b1, b2, tys, locs);
            tys.pop();
            eq
        }
        (RpcType::ForallLoc(x, b1), RpcType::ForallLoc(y, b2)) => {
            locs.push((x.clone(), y.clone()));
            let eq = alpha_eq(b1, b2, tys, locs);
            locs.pop();
            eq
        }
        _ => false,
    }
}

/// A source term with its span. Equality ignores spans.
#[derive(Clone, Debug)]
pub struct RpcTerm {
    pub kind: TermKind,
    pub span: Span,
}

impl PartialEq for RpcTerm {
    fn eq(&self, other: &RpcTerm) -> bool {
        self.kind == other.kind
    }
}

impl Eq for RpcTerm {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermKind {
    Var(String),
    Int(i64),
    Unit,
    Lam {
        loc: Loc,
        param: String,
        annot: RpcType,
        body: Box<RpcTerm>,
    },
    TAbs {
        var: String,
        body: Box<RpcTerm>,
    },
    LAbs {
        var: String,
        body: Box<RpcTerm>,
    },
    App(Box<RpcTerm>, Box<RpcTerm>),
    TApp(Box<RpcTerm>, RpcType),
    LApp(Box<RpcTerm>, Loc),
    Pair(Box<RpcTerm>, Box<RpcTerm>),
    /// `index` is 1 or 2.
    Proj(u8, Box<RpcTerm>),
}

impl From<TermKind> for RpcTerm {
    fn from(kind: TermKind) -> RpcTerm {
        RpcTerm {
            kind,
            span: Span::default(),
        }
    }
}

// Smart constructors, mostly for tests and synthesized code.
impl RpcTerm {
    pub fn with_span(kind: TermKind, span: Span) -> RpcTerm {
        RpcTerm { kind, span }
    }

    pub fn var(name: impl Into<String>) -> RpcTerm {
        TermKind::Var(name.into()).into()
    }

    pub fn int(n: i64) -> RpcTerm {
        TermKind::Int(n).into()
    }

    pub fn unit() -> RpcTerm {
        TermKind::Unit.into()
    }

    pub fn lam(loc: Loc, param: impl Into<String>, annot: RpcType, body: RpcTerm) -> RpcTerm {
        TermKind::Lam {
            loc,
            param: param.into(),
            annot,
            body: Box::new(body),
        }
        .into()
    }

    pub fn tabs(var: impl Into<String>, body: RpcTerm) -> RpcTerm {
        TermKind::TAbs {
            var: var.into(),
            body: Box::new(body),
        }
        .into()
    }

    pub fn labs(var: impl Into<String>, body: RpcTerm) -> RpcTerm {
        TermKind::LAbs {
            var: var.into(),
            body: Box::new(body),
        }
        .into()
    }

    pub fn app(f: RpcTerm, arg: RpcTerm) -> RpcTerm {
        TermKind::App(Box::new(f), Box::new(arg)).into()
    }

    pub fn tapp(f: RpcTerm, ty: RpcType) -> RpcTerm {
        TermKind::TApp(Box::new(f), ty).into()
    }

    pub fn lapp(f: RpcTerm, loc: Loc) -> RpcTerm {
        TermKind::LApp(Box::new(f), loc).into()
    }

    pub fn pair(l: RpcTerm, r: RpcTerm) -> RpcTerm {
        TermKind::Pair(Box::new(l), Box::new(r)).into()
    }

    pub fn proj(index: u8, t: RpcTerm) -> RpcTerm {
        debug_assert!(index == 1 || index == 2);
        TermKind::Proj(index, Box::new(t)).into()
    }

    fn rebuild(&self, kind: TermKind) -> RpcTerm {
        RpcTerm {
            kind,
            span: self.span,
        }
    }

    /// Syntactic values: variables, literals, abstractions and pairs of values.
    pub fn is_value(&self) -> bool {
        match &self.kind {
            TermKind::Var(_)
            | TermKind::Int(_)
            | TermKind::Unit
            | TermKind::Lam { .. }
            | TermKind::TAbs { .. }
            | TermKind::LAbs { .. } => true,
            TermKind::Pair(l, r) => l.is_value() && r.is_value(),
            _ => false,
        }
    }

    pub fn free_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_fv(&mut Vec::new(), &mut out);
        out
    }

    /// Free term variables in order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.walk_fv(&mut Vec::new(), &mut |x| {
            if seen.insert(x.to_string()) {
                out.push(x.to_string());
            }
        });
        out
    }

    fn collect_fv(&self, bound: &mut Vec<String>, out: &mut HashSet<String>) {
        self.walk_fv(bound, &mut |x| {
            out.insert(x.to_string());
        });
    }

    fn walk_fv(&self, bound: &mut Vec<String>, f: &mut dyn FnMut(&str)) {
        match &self.kind {
            TermKind::Var(x) => {
                if !bound.contains(x) {
                    f(x)
                }
            }
            TermKind::Int(_) | TermKind::Unit => {}
            TermKind::Lam { param, body, .. } => {
                bound.push(param.clone());
                body.walk_fv(bound, f);
                bound.pop();
            }
            TermKind::TAbs { body, .. } | TermKind::LAbs { body, .. } => body.walk_fv(bound, f),
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                a.walk_fv(bound, f);
                b.walk_fv(bound, f);
            }
            TermKind::TApp(t, _) | TermKind::LApp(t, _) | TermKind::Proj(_, t) => t.walk_fv(bound, f),
        }
    }

    pub fn free_ty_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_ftv(&mut out);
        out
    }

    fn collect_ftv(&self, out: &mut HashSet<String>) {
        match &self.kind {
            TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => {}
            TermKind::Lam { annot, body, .. } => {
                out.extend(annot.free_ty_vars());
                body.collect_ftv(out);
            }
            TermKind::TAbs { var, body } => {
                let mut inner = HashSet::new();
                body.collect_ftv(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            TermKind::LAbs { body, .. } | TermKind::LApp(body, _) | TermKind::Proj(_, body) => {
                body.collect_ftv(out)
            }
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                a.collect_ftv(out);
                b.collect_ftv(out);
            }
            TermKind::TApp(t, ty) => {
                t.collect_ftv(out);
                out.extend(ty.free_ty_vars());
            }
        }
    }

    pub fn free_loc_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_flv(&mut out);
        out
    }

    fn collect_flv(&self, out: &mut HashSet<String>) {
        let add_loc = |loc: &Loc, out: &mut HashSet<String>| {
            if let Loc::Var(l) = loc {
                out.insert(l.clone());
            }
        };
        match &self.kind {
            TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => {}
            TermKind::Lam { loc, annot, body, .. } => {
                add_loc(loc, out);
                out.extend(annot.free_loc_vars());
                body.collect_flv(out);
            }
            TermKind::LAbs { var, body } => {
                let mut inner = HashSet::new();
                body.collect_flv(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            TermKind::TAbs { body, .. } | TermKind::Proj(_, body) => body.collect_flv(out),
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                a.collect_flv(out);
                b.collect_flv(out);
            }
            TermKind::TApp(t, ty) => {
                t.collect_flv(out);
                out.extend(ty.free_loc_vars());
            }
            TermKind::LApp(t, loc) => {
                t.collect_flv(out);
                add_loc(loc, out);
            }
        }
    }

    /// Capture-avoiding `self[value/name]`.
    pub fn subst(&self, name: &str, value: &RpcTerm) -> RpcTerm {
        let fv = value.free_vars();
        self.subst_with(name, value, &fv)
    }

    fn subst_with(&self, name: &str, value: &RpcTerm, fv: &HashSet<String>) -> RpcTerm {
        match &self.kind {
            TermKind::Var(x) if x == name => value.clone(),
            TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => self.clone(),
            TermKind::Lam { param, .. } if param == name => self.clone(),
            TermKind::Lam {
                loc,
                param,
                annot,
                body,
            } => {
                let (param, body) = if fv.contains(param) {
                    let mut avoid = fv.clone();
                    avoid.extend(body.free_vars());
                    avoid.insert(name.to_string());
                    let fresh = rename_away(param, &avoid);
                    let renamed = body.subst(param, &RpcTerm::var(fresh.clone()));
                    (fresh, renamed)
                } else {
                    (param.clone(), (**body).clone())
                };
                self.rebuild(TermKind::Lam {
                    loc: loc.clone(),
                    param,
                    annot: annot.clone(),
                    body: Box::new(body.subst_with(name, value, fv)),
                })
            }
            TermKind::TAbs { var, body } => self.rebuild(TermKind::TAbs {
                var: var.clone(),
                body: Box::new(body.subst_with(name, value, fv)),
            }),
            TermKind::LAbs { var, body } => self.rebuild(TermKind::LAbs {
                var: var.clone(),
                body: Box::new(body.subst_with(name, value, fv)),
            }),
            TermKind::App(a, b) => self.rebuild(TermKind::App(
                Box::new(a.subst_with(name, value, fv)),
                Box::new(b.subst_with(name, value, fv)),
            )),
            TermKind::Pair(a, b) => self.rebuild(TermKind::Pair(
                Box::new(a.subst_with(name, value, fv)),
                Box::new(b.subst_with(name, value, fv)),
            )),
            TermKind::TApp(t, ty) => self.rebuild(TermKind::TApp(
                Box::new(t.subst_with(name, value, fv)),
                ty.clone(),
            )),
            TermKind::LApp(t, loc) => self.rebuild(TermKind::LApp(
                Box::new(t.subst_with(name, value, fv)),
                loc.clone(),
            )),
            TermKind::Proj(i, t) => self.rebuild(TermKind::Proj(*i, Box::new(t.subst_with(name, value, fv)))),
        }
    }

    /// Capture-avoiding `self[ty/name]` for a type variable.
    pub fn subst_ty(&self, name: &str, ty: &RpcType) -> RpcTerm {
        match &self.kind {
            TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => self.clone(),
            TermKind::Lam {
                loc,
                param,
                annot,
                body,
            } => self.rebuild(TermKind::Lam {
                loc: loc.clone(),
                param: param.clone(),
                annot: annot.subst_ty(name, ty),
                body: Box::new(body.subst_ty(name, ty)),
            }),
            TermKind::TAbs { var, .. } if var == name => self.clone(),
            TermKind::TAbs { var, body } => {
                let ftv = ty.free_ty_vars();
                let (var, body) = if ftv.contains(var) {
                    let mut avoid = ftv;
                    avoid.extend(body.free_ty_vars());
                    avoid.insert(name.to_string());
                    let fresh = rename_away(var, &avoid);
                    (fresh.clone(), body.subst_ty(var, &RpcType::Var(fresh)))
                } else {
                    (var.clone(), (**body).clone())
                };
                self.rebuild(TermKind::TAbs {
                    var,
                    body: Box::new(body.subst_ty(name, ty)),
                })
            }
            TermKind::LAbs { var, body } => {
                let flv = ty.free_loc_vars();
                let (var, body) = if flv.contains(var) {
                    let mut avoid = flv;
                    avoid.extend(body.free_loc_vars());
                    let fresh = rename_away(var, &avoid);
                    (fresh.clone(), body.subst_loc(var, &Loc::Var(fresh)))
                } else {
                    (var.clone(), (**body).clone())
                };
                self.rebuild(TermKind::LAbs {
                    var,
                    body: Box::new(body.subst_ty(name, ty)),
                })
            }
            TermKind::App(a, b) => self.rebuild(TermKind::App(
                Box::new(a.subst_ty(name, ty)),
                Box::new(b.subst_ty(name, ty)),
            )),
            TermKind::Pair(a, b) => self.rebuild(TermKind::Pair(
                Box::new(a.subst_ty(name, ty)),
                Box::new(b.subst_ty(name, ty)),
            )),
            TermKind::TApp(t, arg) => self.rebuild(TermKind::TApp(
                Box::new(t.subst_ty(name, ty)),
                arg.subst_ty(name, ty),
            )),
            TermKind::LApp(t, loc) => {
                self.rebuild(TermKind::LApp(Box::new(t.subst_ty(name, ty)), loc.clone()))
            }
            TermKind::Proj(i, t) => self.rebuild(TermKind::Proj(*i, Box::new(t.subst_ty(name, ty)))),
        }
    }

    /// Capture-avoiding `self[loc/name]` for a location variable.
    pub fn subst_loc(&self, name: &str, to: &Loc) -> RpcTerm {
        match &self.kind {
            TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => self.clone(),
            TermKind::Lam {
                loc,
                param,
                annot,
                body,
            } => self.rebuild(TermKind::Lam {
                loc: loc.subst(name, to),
                param: param.clone(),
                annot: annot.subst_loc(name, to),
                body: Box::new(body.subst_loc(name, to)),
            }),
            TermKind::LAbs { var, .. } if var == name => self.clone(),
            TermKind::LAbs { var, body } => {
                let (var, body) = if to.var_name() == Some(var.as_str()) {
                    let mut avoid = body.free_loc_vars();
                    avoid.insert(var.clone());
                    avoid.insert(name.to_string());
                    let fresh = rename_away(var, &avoid);
                    (fresh.clone(), body.subst_loc(var, &Loc::Var(fresh)))
                } else {
                    (var.clone(), (**body).clone())
                };
                self.rebuild(TermKind::LAbs {
                    var,
                    body: Box::new(body.subst_loc(name, to)),
                })
            }
            TermKind::TAbs { var, body } => self.rebuild(TermKind::TAbs {
                var: var.clone(),
                body: Box::new(body.subst_loc(name, to)),
            }),
            TermKind::App(a, b) => self.rebuild(TermKind::App(
                Box::new(a.subst_loc(name, to)),
                Box::new(b.subst_loc(name, to)),
            )),
            TermKind::Pair(a, b) => self.rebuild(TermKind::Pair(
                Box::new(a.subst_loc(name, to)),
                Box::new(b.subst_loc(name, to)),
            )),
            TermKind::TApp(t, ty) => self.rebuild(TermKind::TApp(
                Box::new(t.subst_loc(name, to)),
                ty.subst_loc(name, to),
            )),
            TermKind::LApp(t, loc) => self.rebuild(TermKind::LApp(
                Box::new(t.subst_loc(name, to)),
                loc.subst(name, to),
            )),
            TermKind::Proj(i, t) => self.rebuild(TermKind::Proj(*i, Box::new(t.subst_loc(name, to)))),
        }
    }

    /// Pre-order iterator over all subterms, including `self`.
    pub fn subterms(&self) -> Vec<&RpcTerm> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            match &t.kind {
                TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => {}
                TermKind::Lam { body, .. }
                | TermKind::TAbs { body, .. }
                | TermKind::LAbs { body, .. }
                | TermKind::TApp(body, _)
                | TermKind::LApp(body, _)
                | TermKind::Proj(_, body) => stack.push(body),
                TermKind::App(a, b) | TermKind::Pair(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        out
    }
}

/// A top-level definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub declared: RpcType,
    pub body: RpcTerm,
    pub span: Span,
}

/// A whole source file: ordered non-recursive definitions and a main term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub defs: Vec<Def>,
    pub main: RpcTerm,
    /// Declared type of `main`, when the file gives one.
    pub main_type: Option<RpcType>,
}

impl SourceProgram {
    pub fn from_main(main: RpcTerm) -> SourceProgram {
        SourceProgram {
            defs: Vec::new(),
            main,
            main_type: None,
        }
    }

    /// Substitutes every definition into `main`, yielding one closed term.
    pub fn desugar(&self) -> RpcTerm {
        let mut bodies: Vec<(String, RpcTerm)> = Vec::new();
        for def in &self.defs {
            let mut body = def.body.clone();
            for (name, earlier) in bodies.iter().rev() {
                body = body.subst(name, earlier);
            }
            bodies.push((def.name.clone(), body));
        }
        let mut main = self.main.clone();
        for (name, body) in bodies.iter().rev() {
            main = main.subst(name, body);
        }
        main
    }
}
