//! Abstract syntax of the typed client-server calculus.

use std::collections::HashSet;

use indexmap::IndexMap;

use crate::loc::{Loc, Side};
use crate::names::rename_away;
use crate::rpc::syntax::BaseType;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CsType {
    Base(BaseType),
    Fun(Box<CsType>, Loc, Box<CsType>),
    Clo(Box<CsType>),
    Pair(Box<CsType>, Box<CsType>),
    Var(String),
    ForallTy(String, Box<CsType>),
    ForallLoc(String, Box<CsType>),
    Monad(Box<CsType>),
}

impl CsType {
    pub const INT: CsType = CsType::Base(BaseType::Int);
    pub const UNIT: CsType = CsType::Base(BaseType::Unit);

    pub fn fun(a: CsType, loc: Loc, b: CsType) -> CsType {
        CsType::Fun(Box::new(a), loc, Box::new(b))
    }

    pub fn clo(a: CsType) -> CsType {
        CsType::Clo(Box::new(a))
    }

    pub fn pair(a: CsType, b: CsType) -> CsType {
        CsType::Pair(Box::new(a), Box::new(b))
    }

    pub fn monad(a: CsType) -> CsType {
        CsType::Monad(Box::new(a))
    }

    pub fn forall_ty(a: impl Into<String>, body: CsType) -> CsType {
        CsType::ForallTy(a.into(), Box::new(body))
    }

    pub fn forall_loc(l: impl Into<String>, body: CsType) -> CsType {
        CsType::ForallLoc(l.into(), Box::new(body))
    }

    /// The relocatable types: values of these may be shipped to the other
    /// location. Quantification over locations only ever appears under a
    /// closure, so a bare `∀l.A` is not relocatable.
    pub fn valty(&self) -> bool {
        match self {
            CsType::Var(_) | CsType::Base(_) | CsType::Clo(_) | CsType::ForallTy(..) => true,
            CsType::Pair(a, b) => a.valty() && b.valty(),
            CsType::Monad(_) | CsType::ForallLoc(..) | CsType::Fun(..) => false,
        }
    }

    pub fn free_ty_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_vars(&mut Vec::new(), &mut Vec::new(), &mut out, &mut HashSet::new());
        out
    }

    pub fn free_loc_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_vars(&mut Vec::new(), &mut Vec::new(), &mut HashSet::new(), &mut out);
        out
    }

    fn collect_vars(
        &self,
        tys: &mut Vec<String>,
        locs: &mut Vec<String>,
        ftv: &mut HashSet<String>,
        flv: &mut HashSet<String>,
    ) {
        match self {
            CsType::Base(_) => {}
            CsType::Var(a) => {
                if !tys.contains(a) {
                    ftv.insert(a.clone());
                }
            }
            CsType::Fun(a, loc, b) => {
                if let Loc::Var(l) = loc {
                    if !locs.contains(l) {
                        flv.insert(l.clone());
                    }
                }
                a.collect_vars(tys, locs, ftv, flv);
                b.collect_vars(tys, locs, ftv, flv);
            }
            CsType::Pair(a, b) => {
                a.collect_vars(tys, locs, ftv, flv);
                b.collect_vars(tys, locs, ftv, flv);
            }
            CsType::Clo(a) | CsType::Monad(a) => a.collect_vars(tys, locs, ftv, flv),
            CsType::ForallTy(a, body) => {
                tys.push(a.clone());
                body.collect_vars(tys, locs, ftv, flv);
                tys.pop();
            }
            CsType::ForallLoc(l, body) => {
                locs.push(l.clone());
                body.collect_vars(tys, locs, ftv, flv);
                locs.pop();
            }
        }
    }

    fn map_children(&self, f: &mut impl FnMut(&CsType) -> CsType) -> CsType {
        match self {
            CsType::Base(_) | CsType::Var(_) => self.clone(),
            CsType::Fun(a, loc, b) => CsType::fun(f(a), loc.clone(), f(b)),
            CsType::Clo(a) => CsType::clo(f(a)),
            CsType::Monad(a) => CsType::monad(f(a)),
            CsType::Pair(a, b) => CsType::pair(f(a), f(b)),
            CsType::ForallTy(a, body) => CsType::forall_ty(a.clone(), f(body)),
            CsType::ForallLoc(l, body) => CsType::forall_loc(l.clone(), f(body)),
        }
    }

    /// Capture-avoiding `self[to/name]` for a type variable.
    pub fn subst_ty(&self, name: &str, to: &CsType) -> CsType {
        match self {
            CsType::Var(a) if a == name => to.clone(),
            CsType::ForallTy(a, _) if a == name => self.clone(),
            CsType::ForallTy(a, body) if to.free_ty_vars().contains(a) => {
                let mut avoid = to.free_ty_vars();
                avoid.extend(body.free_ty_vars());
                avoid.insert(name.to_string());
                let fresh = rename_away(a, &avoid);
                let body = body.subst_ty(a, &CsType::Var(fresh.clone()));
                CsType::forall_ty(fresh, body.subst_ty(name, to))
            }
            CsType::ForallLoc(l, body) if to.free_loc_vars().contains(l) => {
                let mut avoid = to.free_loc_vars();
                avoid.extend(body.free_loc_vars());
                let fresh = rename_away(l, &avoid);
                let body = body.subst_loc(l, &Loc::Var(fresh.clone()));
                CsType::forall_loc(fresh, body.subst_ty(name, to))
            }
            _ => self.map_children(&mut |t| t.subst_ty(name, to)),
        }
    }

    /// Capture-avoiding `self[to/name]` for a location variable.
    pub fn subst_loc(&self, name: &str, to: &Loc) -> CsType {
        match self {
            CsType::Fun(a, loc, b) => {
                CsType::fun(a.subst_loc(name, to), loc.subst(name, to), b.subst_loc(name, to))
            }
            CsType::ForallLoc(l, _) if l == name => self.clone(),
            CsType::ForallLoc(l, body) if to.var_name() == Some(l.as_str()) => {
                let mut avoid = body.free_loc_vars();
                avoid.insert(l.clone());
                avoid.insert(name.to_string());
                let fresh = rename_away(l, &avoid);
                let body = body.subst_loc(l, &Loc::Var(fresh.clone()));
                CsType::forall_loc(fresh, body.subst_loc(name, to))
            }
            _ => self.map_children(&mut |t| t.subst_loc(name, to)),
        }
    }

    pub fn alpha_eq(&self, other: &CsType) -> bool {
        alpha_eq(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

type Binders = Vec<(String, String)>;

fn bound_eq(env: &Binders, x: &str, y: &str) -> bool {
    for (l, r) in env.iter().rev() {
        if l == x || r == y {
            return l == x && r == y;
        }
    }
    x == y
}

fn alpha_eq(a: &CsType, b: &CsType, tys: &mut Binders, locs: &mut Binders) -> bool {
    match (a, b) {
        (CsType::Base(x), CsType::Base(y)) => x == y,
        (CsType::Var(x), CsType::Var(y)) => bound_eq(tys, x, y),
        (CsType::Fun(a1, l1, b1), CsType::Fun(a2, l2, b2)) => {
            let locs_eq = match (l1, l2) {
                (Loc::Var(x), Loc::Var(y)) => bound_eq(locs, x, y),
                _ => l1 == l2,
            };
            locs_eq && alpha_eq(a1, a2, tys, locs) && alpha_eq(b1, b2, tys, locs)
        }
        (CsType::Pair(a1, b1), CsType::Pair(a2, b2)) => {
            alpha_eq(a1, a2, tys, locs) && alpha_eq(b1, b2, tys, locs)
        }
        (CsType::Clo(x), CsType::Clo(y)) | (CsType::Monad(x), CsType::Monad(y)) => alpha_eq(x, y, tys, locs),
        (CsType::ForallTy(x, b1), CsType::ForallTy(y, b2)) => {
            tys.push((x.clone(), y.clone()));
            let eq = alpha_eq(b1, b2, tys, locs);
            tys.pop();
            eq
        }
        (CsType::ForallLoc(x, b1), CsType::ForallLoc(y, b2)) => {
            locs.push((x.clone(), y.clone()));
            let eq = alpha_eq(b1, b2, tys, locs);
            locs.pop();
            eq
        }
        _ => false,
    }
}

/// An instance of a named code: `F[L̄ Ā]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeRef {
    pub name: String,
    pub loc_args: Vec<Loc>,
    pub ty_args: Vec<CsType>,
}

impl CodeRef {
    pub fn plain(name: impl Into<String>) -> CodeRef {
        CodeRef {
            name: name.into(),
            loc_args: Vec::new(),
            ty_args: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CsValue {
    Var(String),
    Int(i64),
    Unit,
    Pair(Box<CsValue>, Box<CsValue>),
    Clo(Vec<CsValue>, CodeRef),
    TAbs(String, Box<CsValue>),
    UnitM(Box<CsValue>),
    Do(String, Box<CsTerm>, Box<CsTerm>),
    Req(Box<CsValue>, Box<CsValue>),
    Call(Box<CsValue>, Box<CsValue>),
    Gen(Loc, Box<CsValue>, Box<CsValue>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CsTerm {
    Val(CsValue),
    Let(String, Box<CsTerm>, Box<CsTerm>),
    Proj(u8, CsValue),
    App(CsValue, CsValue),
    TApp(CsValue, CsType),
    LApp(CsValue, Loc),
}

impl From<CsValue> for CsTerm {
    fn from(v: CsValue) -> CsTerm {
        CsTerm::Val(v)
    }
}

impl CsValue {
    pub fn var(x: impl Into<String>) -> CsValue {
        CsValue::Var(x.into())
    }

    pub fn unit_m(v: CsValue) -> CsValue {
        CsValue::UnitM(Box::new(v))
    }

    pub fn pair(a: CsValue, b: CsValue) -> CsValue {
        CsValue::Pair(Box::new(a), Box::new(b))
    }

    pub fn do_(x: impl Into<String>, m: CsTerm, n: CsTerm) -> CsValue {
        CsValue::Do(x.into(), Box::new(m), Box::new(n))
    }

    pub fn req(f: CsValue, a: CsValue) -> CsValue {
        CsValue::Req(Box::new(f), Box::new(a))
    }

    pub fn call(f: CsValue, a: CsValue) -> CsValue {
        CsValue::Call(Box::new(f), Box::new(a))
    }

    pub fn gen(loc: Loc, f: CsValue, a: CsValue) -> CsValue {
        CsValue::Gen(loc, Box::new(f), Box::new(a))
    }

    /// Monadic values: the computations of the calculus.
    pub fn is_monadic(&self) -> bool {
        matches!(
            self,
            CsValue::UnitM(_) | CsValue::Do(..) | CsValue::Req(..) | CsValue::Call(..) | CsValue::Gen(..)
        )
    }

    /// `self[v/x]`. Callers substitute closed values, or values whose free
    /// variables are never rebound inside `self` (compiler-generated binders
    /// are always fresh), so no renaming is needed.
    pub fn subst(&self, x: &str, v: &CsValue) -> CsValue {
        match self {
            CsValue::Var(y) if y == x => v.clone(),
            CsValue::Var(_) | CsValue::Int(_) | CsValue::Unit => self.clone(),
            CsValue::Pair(a, b) => CsValue::pair(a.subst(x, v), b.subst(x, v)),
            CsValue::Clo(env, code) => {
                CsValue::Clo(env.iter().map(|w| w.subst(x, v)).collect(), code.clone())
            }
            CsValue::TAbs(a, body) => CsValue::TAbs(a.clone(), Box::new(body.subst(x, v))),
            CsValue::UnitM(w) => CsValue::unit_m(w.subst(x, v)),
            CsValue::Do(y, m, n) => {
                let n = if y == x { (**n).clone() } else { n.subst(x, v) };
                CsValue::Do(y.clone(), Box::new(m.subst(x, v)), Box::new(n))
            }
            CsValue::Req(f, a) => CsValue::req(f.subst(x, v), a.subst(x, v)),
            CsValue::Call(f, a) => CsValue::call(f.subst(x, v), a.subst(x, v)),
            CsValue::Gen(l, f, a) => CsValue::gen(l.clone(), f.subst(x, v), a.subst(x, v)),
        }
    }

    pub fn subst_ty(&self, a: &str, ty: &CsType) -> CsValue {
        match self {
            CsValue::Var(_) | CsValue::Int(_) | CsValue::Unit => self.clone(),
            CsValue::Pair(x, y) => CsValue::pair(x.subst_ty(a, ty), y.subst_ty(a, ty)),
            CsValue::Clo(env, code) => CsValue::Clo(
                env.iter().map(|w| w.subst_ty(a, ty)).collect(),
                CodeRef {
                    name: code.name.clone(),
                    loc_args: code.loc_args.clone(),
                    ty_args: code.ty_args.iter().map(|t| t.subst_ty(a, ty)).collect(),
                },
            ),
            CsValue::TAbs(b, _) if b == a => self.clone(),
            CsValue::TAbs(b, body) => CsValue::TAbs(b.clone(), Box::new(body.subst_ty(a, ty))),
            CsValue::UnitM(w) => CsValue::unit_m(w.subst_ty(a, ty)),
            CsValue::Do(y, m, n) => CsValue::do_(y.clone(), m.subst_ty(a, ty), n.subst_ty(a, ty)),
            CsValue::Req(f, x) => CsValue::req(f.subst_ty(a, ty), x.subst_ty(a, ty)),
            CsValue::Call(f, x) => CsValue::call(f.subst_ty(a, ty), x.subst_ty(a, ty)),
            CsValue::Gen(l, f, x) => CsValue::gen(l.clone(), f.subst_ty(a, ty), x.subst_ty(a, ty)),
        }
    }

    pub fn subst_loc(&self, l: &str, to: &Loc) -> CsValue {
        match self {
            CsValue::Var(_) | CsValue::Int(_) | CsValue::Unit => self.clone(),
            CsValue::Pair(x, y) => CsValue::pair(x.subst_loc(l, to), y.subst_loc(l, to)),
            CsValue::Clo(env, code) => CsValue::Clo(
                env.iter().map(|w| w.subst_loc(l, to)).collect(),
                CodeRef {
                    name: code.name.clone(),
                    loc_args: code.loc_args.iter().map(|m| m.subst(l, to)).collect(),
                    ty_args: code.ty_args.iter().map(|t| t.subst_loc(l, to)).collect(),
                },
            ),
            CsValue::TAbs(b, body) => CsValue::TAbs(b.clone(), Box::new(body.subst_loc(l, to))),
            CsValue::UnitM(w) => CsValue::unit_m(w.subst_loc(l, to)),
            CsValue::Do(y, m, n) => CsValue::do_(y.clone(), m.subst_loc(l, to), n.subst_loc(l, to)),
            CsValue::Req(f, x) => CsValue::req(f.subst_loc(l, to), x.subst_loc(l, to)),
            CsValue::Call(f, x) => CsValue::call(f.subst_loc(l, to), x.subst_loc(l, to)),
            CsValue::Gen(m, f, x) => CsValue::gen(m.subst(l, to), f.subst_loc(l, to), x.subst_loc(l, to)),
        }
    }

    pub fn free_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.walk_fv(&mut Vec::new(), &mut |x| {
            out.insert(x.to_string());
        });
        out
    }

    fn walk_fv(&self, bound: &mut Vec<String>, f: &mut dyn FnMut(&str)) {
        match self {
            CsValue::Var(x) => {
                if !bound.contains(x) {
                    f(x)
                }
            }
            CsValue::Int(_) | CsValue::Unit => {}
            CsValue::Pair(a, b) | CsValue::Req(a, b) | CsValue::Call(a, b) | CsValue::Gen(_, a, b) => {
                a.walk_fv(bound, f);
                b.walk_fv(bound, f);
            }
            CsValue::Clo(env, _) => env.iter().for_each(|w| w.walk_fv(bound, f)),
            CsValue::TAbs(_, v) | CsValue::UnitM(v) => v.walk_fv(bound, f),
            CsValue::Do(x, m, n) => {
                m.walk_fv(bound, f);
                bound.push(x.clone());
                n.walk_fv(bound, f);
                bound.pop();
            }
        }
    }

    /// Number of syntax nodes, counting a closure's code reference as one.
    pub fn size(&self) -> usize {
        1 + match self {
            CsValue::Var(_) | CsValue::Int(_) | CsValue::Unit => 0,
            CsValue::Pair(a, b) | CsValue::Req(a, b) | CsValue::Call(a, b) => a.size() + b.size(),
            CsValue::Gen(_, a, b) => 1 + a.size() + b.size(),
            CsValue::Clo(env, code) => 1 + code.loc_args.len() + env.iter().map(CsValue::size).sum::<usize>(),
            CsValue::TAbs(_, v) | CsValue::UnitM(v) => v.size(),
            CsValue::Do(_, m, n) => m.size() + n.size(),
        }
    }

    pub fn count_gens(&self) -> usize {
        match self {
            CsValue::Var(_) | CsValue::Int(_) | CsValue::Unit => 0,
            CsValue::Pair(a, b) | CsValue::Req(a, b) | CsValue::Call(a, b) => a.count_gens() + b.count_gens(),
            CsValue::Gen(_, a, b) => 1 + a.count_gens() + b.count_gens(),
            CsValue::Clo(env, _) => env.iter().map(CsValue::count_gens).sum(),
            CsValue::TAbs(_, v) | CsValue::UnitM(v) => v.count_gens(),
            CsValue::Do(_, m, n) => m.count_gens() + n.count_gens(),
        }
    }
}

impl CsTerm {
    pub fn let_(x: impl Into<String>, m: CsTerm, n: CsTerm) -> CsTerm {
        CsTerm::Let(x.into(), Box::new(m), Box::new(n))
    }

    pub fn subst(&self, x: &str, v: &CsValue) -> CsTerm {
        match self {
            CsTerm::Val(w) => CsTerm::Val(w.subst(x, v)),
            CsTerm::Let(y, m, n) => {
                let n = if y == x { (**n).clone() } else { n.subst(x, v) };
                CsTerm::Let(y.clone(), Box::new(m.subst(x, v)), Box::new(n))
            }
            CsTerm::Proj(i, w) => CsTerm::Proj(*i, w.subst(x, v)),
            CsTerm::App(f, w) => CsTerm::App(f.subst(x, v), w.subst(x, v)),
            CsTerm::TApp(w, ty) => CsTerm::TApp(w.subst(x, v), ty.clone()),
            CsTerm::LApp(w, l) => CsTerm::LApp(w.subst(x, v), l.clone()),
        }
    }

    pub fn subst_ty(&self, a: &str, ty: &CsType) -> CsTerm {
        match self {
            CsTerm::Val(w) => CsTerm::Val(w.subst_ty(a, ty)),
            CsTerm::Let(y, m, n) => CsTerm::let_(y.clone(), m.subst_ty(a, ty), n.subst_ty(a, ty)),
            CsTerm::Proj(i, w) => CsTerm::Proj(*i, w.subst_ty(a, ty)),
            CsTerm::App(f, w) => CsTerm::App(f.subst_ty(a, ty), w.subst_ty(a, ty)),
            CsTerm::TApp(w, t) => CsTerm::TApp(w.subst_ty(a, ty), t.subst_ty(a, ty)),
            CsTerm::LApp(w, l) => CsTerm::LApp(w.subst_ty(a, ty), l.clone()),
        }
    }

    pub fn subst_loc(&self, l: &str, to: &Loc) -> CsTerm {
        match self {
            CsTerm::Val(w) => CsTerm::Val(w.subst_loc(l, to)),
            CsTerm::Let(y, m, n) => CsTerm::let_(y.clone(), m.subst_loc(l, to), n.subst_loc(l, to)),
            CsTerm::Proj(i, w) => CsTerm::Proj(*i, w.subst_loc(l, to)),
            CsTerm::App(f, w) => CsTerm::App(f.subst_loc(l, to), w.subst_loc(l, to)),
            CsTerm::TApp(w, t) => CsTerm::TApp(w.subst_loc(l, to), t.subst_loc(l, to)),
            CsTerm::LApp(w, m) => CsTerm::LApp(w.subst_loc(l, to), m.subst(l, to)),
        }
    }

    pub fn free_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.walk_fv(&mut Vec::new(), &mut |x| {
            out.insert(x.to_string());
        });
        out
    }

    fn walk_fv(&self, bound: &mut Vec<String>, f: &mut dyn FnMut(&str)) {
        match self {
            CsTerm::Val(v) | CsTerm::Proj(_, v) | CsTerm::TApp(v, _) | CsTerm::LApp(v, _) => {
                v.walk_fv(bound, f)
            }
            CsTerm::App(a, b) => {
                a.walk_fv(bound, f);
                b.walk_fv(bound, f);
            }
            CsTerm::Let(x, m, n) => {
                m.walk_fv(bound, f);
                bound.push(x.clone());
                n.walk_fv(bound, f);
                bound.pop();
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            CsTerm::Val(v) => v.size(),
            CsTerm::Let(_, m, n) => 1 + m.size() + n.size(),
            CsTerm::Proj(_, v) | CsTerm::TApp(v, _) => 1 + v.size(),
            CsTerm::LApp(v, _) => 2 + v.size(),
            CsTerm::App(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn count_gens(&self) -> usize {
        match self {
            CsTerm::Val(v) | CsTerm::Proj(_, v) | CsTerm::TApp(v, _) | CsTerm::LApp(v, _) => v.count_gens(),
            CsTerm::App(a, b) => a.count_gens() + b.count_gens(),
            CsTerm::Let(_, m, n) => m.count_gens() + n.count_gens(),
        }
    }
}

/// Which function maps a code belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placement {
    Client,
    Server,
    /// Shared by both maps: lambdas at location variables and all location
    /// abstractions.
    Common,
}

impl Placement {
    pub fn includes(self, side: Side) -> bool {
        match self {
            Placement::Common => true,
            Placement::Client => side == Side::Client,
            Placement::Server => side == Side::Server,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpenCode {
    /// `λx.M` of type `A -loc-> B`.
    Lam {
        param: String,
        param_ty: CsType,
        loc: Loc,
        res_ty: CsType,
        body: CsTerm,
    },
    /// `Λl.V` of type `∀l.A`.
    LAbs {
        var: String,
        body_ty: CsType,
        body: CsValue,
    },
}

/// A closed code `l̄ ᾱ. z̄. OpenCode`, with the types of its captured
/// variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Code {
    pub loc_params: Vec<String>,
    pub ty_params: Vec<String>,
    pub env: Vec<(String, CsType)>,
    pub open: OpenCode,
    pub placement: Placement,
}

impl Code {
    /// The type of the open code, under the prefix.
    pub fn code_type(&self) -> CsType {
        match &self.open {
            OpenCode::Lam {
                param_ty,
                loc,
                res_ty,
                ..
            } => CsType::fun(param_ty.clone(), loc.clone(), res_ty.clone()),
            OpenCode::LAbs { var, body_ty, .. } => CsType::forall_loc(var.clone(), body_ty.clone()),
        }
    }

    /// Applies `[L̄/l̄][Ā/ᾱ]` to a type mentioning the prefix.
    pub fn instantiate_type(&self, ty: &CsType, locs: &[Loc], tys: &[CsType]) -> CsType {
        let mut ty = ty.clone();
        for (l, to) in self.loc_params.iter().zip(locs) {
            ty = ty.subst_loc(l, to);
        }
        for (a, to) in self.ty_params.iter().zip(tys) {
            ty = ty.subst_ty(a, to);
        }
        ty
    }

    pub fn size(&self) -> usize {
        1 + match &self.open {
            OpenCode::Lam { body, .. } => body.size(),
            OpenCode::LAbs { body, .. } => body.size(),
        }
    }

    pub fn count_gens(&self) -> usize {
        match &self.open {
            OpenCode::Lam { body, .. } => body.count_gens(),
            OpenCode::LAbs { body, .. } => body.count_gens(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsProgram {
    pub main: CsTerm,
    /// Every code once, in emission order; the placement says which maps
    /// it belongs to.
    pub codes: IndexMap<String, Code>,
}

impl CsProgram {
    /// Looks `name` up in the function map of `side`.
    pub fn lookup(&self, side: Side, name: &str) -> Option<&Code> {
        self.codes.get(name).filter(|c| c.placement.includes(side))
    }

    /// The codes in the function map of `side`, in emission order.
    pub fn map(&self, side: Side) -> impl Iterator<Item = (&String, &Code)> {
        self.codes.iter().filter(move |(_, c)| c.placement.includes(side))
    }

    pub fn size(&self) -> usize {
        self.main.size() + self.codes.values().map(Code::size).sum::<usize>()
    }

    pub fn count_gens(&self) -> usize {
        self.main.count_gens() + self.codes.values().map(Code::count_gens).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relocatable_types() {
        assert!(!CsType::monad(CsType::INT).valty());
        assert!(CsType::clo(CsType::fun(CsType::INT, Loc::Server, CsType::monad(CsType::INT))).valty());
        assert!(!CsType::pair(CsType::INT, CsType::monad(CsType::INT)).valty());
        assert!(CsType::pair(CsType::INT, CsType::Var("a".into())).valty());
        assert!(CsType::forall_ty("a", CsType::monad(CsType::Var("a".into()))).valty());
        assert!(!CsType::forall_loc("l", CsType::INT).valty());
    }

    #[test]
    fn type_substitution_avoids_capture() {
        let ty = CsType::forall_ty(
            "b",
            CsType::pair(CsType::Var("a".into()), CsType::Var("b".into())),
        );
        let out = ty.subst_ty("a", &CsType::Var("b".into()));
        let expected = CsType::forall_ty(
            "c",
            CsType::pair(CsType::Var("b".into()), CsType::Var("c".into())),
        );
        assert!(out.alpha_eq(&expected), "{out:?}");
    }

    #[test]
    fn value_substitution_respects_shadowing() {
        let m = CsValue::do_(
            "x",
            CsTerm::Val(CsValue::unit_m(CsValue::var("x"))),
            CsTerm::Val(CsValue::unit_m(CsValue::var("x"))),
        );
        let out = m.subst("x", &CsValue::Int(7));
        assert_eq!(
            out,
            CsValue::do_(
                "x",
                CsTerm::Val(CsValue::unit_m(CsValue::Int(7))),
                CsTerm::Val(CsValue::unit_m(CsValue::var("x"))),
            )
        );
    }
}
