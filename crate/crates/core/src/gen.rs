//! Random closed, well-typed source programs, and a shrinker for the ones
//! that break something.
//!
//! Generation is goal-directed: it starts from a type and picks a typing
//! rule whose conclusion has that type, generating the premises
//! recursively. Every program is therefore well typed by construction; the
//! type checker is still run on the result as a guard.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::loc::Loc;
use crate::rpc::syntax::{RpcTerm, RpcType, SourceProgram, TermKind};
use crate::rpc::typeck::typecheck_program;
use crate::surface::count_term;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    /// Upper bound on `count_term` of a generated main term.
    pub max_nodes: usize,
    /// Nesting depth of randomly chosen types.
    pub type_depth: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_nodes: 40,
            type_depth: 2,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Ctx {
    vars: Vec<(String, RpcType)>,
    locs: Vec<String>,
    tys: Vec<String>,
}

impl Ctx {
    fn with_var(&self, x: &str, ty: &RpcType) -> Ctx {
        let mut c = self.clone();
        c.vars.push((x.to_string(), ty.clone()));
        c
    }

    fn with_loc(&self, l: &str) -> Ctx {
        let mut c = self.clone();
        c.locs.push(l.to_string());
        c
    }

    fn with_ty(&self, a: &str) -> Ctx {
        let mut c = self.clone();
        c.tys.push(a.to_string());
        c
    }

    /// Innermost variable of exactly this type.
    fn var_of(&self, ty: &RpcType) -> Option<&str> {
        self.vars
            .iter()
            .rev()
            .find(|(_, t)| t.alpha_eq(ty))
            .map(|(x, _)| x.as_str())
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    fresh: usize,
}

impl Generator {
    pub fn new(seed: u64, cfg: GenConfig) -> Generator {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            fresh: 0,
        }
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    /// The next program; its type is returned alongside.
    pub fn program(&mut self) -> (SourceProgram, RpcType) {
        loop {
            self.fresh = 0;
            let ctx = Ctx::default();
            let ty = self.goal_type();
            let fuel = self.cfg.max_nodes as i64;
            let term = self.term(&ctx, &Loc::Client, &ty, fuel);
            if count_term(&term) > self.cfg.max_nodes {
                continue;
            }
            let program = SourceProgram::from_main(term);
            match typecheck_program(&program, &Loc::Client) {
                Ok(got) => return (program, got),
                Err(e) => panic!(
                    "generator produced an ill-typed program ({e}): {}",
                    crate::surface::pretty_term(&program.main)
                ),
            }
        }
    }

    /// Mostly first-order results, so that stage values compare exactly.
    fn goal_type(&mut self) -> RpcType {
        let ctx = Ctx::default();
        if self.rng.gen_bool(0.75) {
            self.data_type(self.cfg.type_depth)
        } else {
            self.inhabited_type(&ctx, self.cfg.type_depth)
        }
    }

    fn data_type(&mut self, depth: usize) -> RpcType {
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 4 }) {
            0 | 2 => RpcType::INT,
            1 => RpcType::UNIT,
            _ => RpcType::pair(self.data_type(depth - 1), self.data_type(depth - 1)),
        }
    }

    fn loc(&mut self, ctx: &Ctx) -> Loc {
        let n = 2 + ctx.locs.len();
        match self.rng.gen_range(0..n) {
            0 => Loc::Client,
            1 => Loc::Server,
            i => Loc::Var(ctx.locs[i - 2].clone()),
        }
    }

    fn random_type(&mut self, ctx: &Ctx, depth: usize) -> RpcType {
        let choices = if depth == 0 { 3 } else { 8 };
        match self.rng.gen_range(0..choices) {
            0 => RpcType::INT,
            1 => RpcType::UNIT,
            2 => match ctx.tys.choose(&mut self.rng) {
                Some(a) => RpcType::Var(a.clone()),
                None => RpcType::INT,
            },
            3 | 4 => {
                let a = self.random_type(ctx, depth - 1);
                let l = self.loc(ctx);
                let b = self.random_type(ctx, depth - 1);
                RpcType::fun(a, l, b)
            }
            5 => RpcType::pair(self.random_type(ctx, depth - 1), self.random_type(ctx, depth - 1)),
            6 => {
                let a = self.name("a");
                let body = self.random_type(&ctx.with_ty(&a), depth - 1);
                RpcType::forall_ty(a, body)
            }
            _ => {
                let l = self.name("l");
                let body = self.random_type(&ctx.with_loc(&l), depth - 1);
                RpcType::forall_loc(l, body)
            }
        }
    }

    /// A random type that has a closed-over-`ctx` inhabitant.
    fn inhabited_type(&mut self, ctx: &Ctx, depth: usize) -> RpcType {
        for _ in 0..20 {
            let ty = self.random_type(ctx, depth);
            if minimal(ctx, &ty).is_some() {
                return ty;
            }
        }
        RpcType::INT
    }

    fn int(&mut self) -> RpcTerm {
        RpcTerm::int(self.rng.gen_range(-3..50))
    }

    /// A term of type `ty` running at `at`, of roughly `fuel` nodes.
    fn term(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64) -> RpcTerm {
        if fuel <= 2 {
            return self.small(ctx, ty);
        }
        match self.rng.gen_range(0..12) {
            0..=2 => self.intro(ctx, at, ty, fuel, false),
            3..=5 => self.app(ctx, at, ty, fuel),
            6 => self.proj(ctx, at, ty, fuel),
            7 => self.lapp(ctx, at, ty, fuel),
            8 => self.tapp(ctx, at, ty, fuel),
            9 => self.elim_var(ctx, at, ty, fuel),
            _ => self.poly_app(ctx, at, ty, fuel),
        }
    }

    fn small(&mut self, ctx: &Ctx, ty: &RpcType) -> RpcTerm {
        if *ty == RpcType::INT && ctx.var_of(ty).is_none() {
            return self.int();
        }
        minimal(ctx, ty).expect("goal types are inhabited")
    }

    /// Introduction forms. Under a type or location abstraction the body
    /// must be a syntactic value, hence `value_only`.
    fn intro(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64, value_only: bool) -> RpcTerm {
        if fuel <= 2 {
            return self.small(ctx, ty);
        }
        if let Some(x) = ctx.var_of(ty) {
            // Some types are inhabited only by the variable itself.
            if self.rng.gen_bool(0.3) || structural(ctx, ty).is_none() {
                return RpcTerm::var(x);
            }
        }
        match ty {
            RpcType::Base(_) => self.small(ctx, ty),
            RpcType::Var(_) => self.small(ctx, ty),
            RpcType::Pair(a, b) => {
                let half = (fuel - 1) / 2;
                if value_only {
                    RpcTerm::pair(
                        self.intro(ctx, at, a, half, true),
                        self.intro(ctx, at, b, half, true),
                    )
                } else {
                    RpcTerm::pair(self.term(ctx, at, a, half), self.term(ctx, at, b, half))
                }
            }
            RpcType::Fun(a, l, b) => {
                let x = self.name("x");
                let body = self.term(&ctx.with_var(&x, a), l, b, fuel - 2);
                RpcTerm::lam(l.clone(), x, (**a).clone(), body)
            }
            RpcType::ForallTy(a, body) => {
                let fresh = self.name("a");
                let body = body.subst_ty(a, &RpcType::Var(fresh.clone()));
                let v = self.intro(&ctx.with_ty(&fresh), at, &body, fuel - 1, true);
                RpcTerm::tabs(fresh, v)
            }
            RpcType::ForallLoc(l, body) => {
                let fresh = self.name("l");
                let body = body.subst_loc(l, &Loc::Var(fresh.clone()));
                let v = self.intro(&ctx.with_loc(&fresh), at, &body, fuel - 2, true);
                RpcTerm::labs(fresh, v)
            }
        }
    }

    /// `(λ^L x:A. …) arg` at any `L`: local or remote depending on `at`.
    fn app(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64) -> RpcTerm {
        let a = self.inhabited_type(ctx, 1);
        let l = self.loc(ctx);
        let fty = RpcType::fun(a.clone(), l, ty.clone());
        let half = (fuel - 1) / 2;
        let f = self.term(ctx, at, &fty, half + fuel % 2);
        let arg = self.term(ctx, at, &a, half);
        RpcTerm::app(f, arg)
    }

    fn proj(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64) -> RpcTerm {
        let other = self.inhabited_type(ctx, 1);
        if self.rng.gen_bool(0.5) {
            RpcTerm::proj(1, self.term(ctx, at, &RpcType::pair(ty.clone(), other), fuel - 1))
        } else {
            RpcTerm::proj(2, self.term(ctx, at, &RpcType::pair(other, ty.clone()), fuel - 1))
        }
    }

    /// `({l}. λ^l x:A. M) {L} arg`: the body runs at a location variable,
    /// so applications inside it may need a run-time location check.
    fn poly_app(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64) -> RpcTerm {
        if fuel < 8 {
            return self.app(ctx, at, ty, fuel);
        }
        let l = self.name("l");
        let inner = ctx.with_loc(&l);
        let a = self.inhabited_type(ctx, 1);
        let x = self.name("x");
        let body_fuel = (fuel - 5) * 2 / 3;
        let body = self.term(&inner.with_var(&x, &a), &Loc::Var(l.clone()), ty, body_fuel);
        let lam = RpcTerm::lam(Loc::Var(l.clone()), x, a.clone(), body);
        let target = self.loc(ctx);
        let arg = self.term(ctx, at, &a, fuel - 5 - body_fuel);
        RpcTerm::app(RpcTerm::lapp(RpcTerm::labs(l, lam), target), arg)
    }

    /// `V {L}` where `V : ∀l. A'` and `A'[L/l] = ty`: some occurrences of
    /// `L` in `ty` are abstracted.
    fn lapp(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64) -> RpcTerm {
        let target = self.loc(ctx);
        let l = self.name("l");
        let abstracted = abstract_loc(ty, &target, &Loc::Var(l.clone()), &mut self.rng);
        let fty = RpcType::forall_loc(l, abstracted);
        // Abstracting can turn a type only a variable inhabits into one
        // nothing does.
        if minimal(ctx, &fty).is_none() {
            return self.intro(ctx, at, ty, fuel, false);
        }
        RpcTerm::lapp(self.term(ctx, at, &fty, fuel - 2), target)
    }

    /// `V [B]` where `V : ∀α. A'` and `A'[B/α] = ty`.
    fn tapp(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64) -> RpcTerm {
        let mut candidates = vec![RpcType::INT, RpcType::UNIT];
        candidates.extend(ctx.tys.iter().map(|a| RpcType::Var(a.clone())));
        let arg = candidates.choose(&mut self.rng).cloned().expect("non-empty");
        let a = self.name("a");
        let abstracted = abstract_type(ty, &arg, &RpcType::Var(a.clone()), &mut self.rng);
        let fty = RpcType::forall_ty(a, abstracted);
        // `∀α. α` and the like have no closed inhabitant.
        if minimal(ctx, &fty).is_none() {
            return self.intro(ctx, at, ty, fuel, false);
        }
        RpcTerm::tapp(self.term(ctx, at, &fty, fuel - 1), arg)
    }

    /// Uses a variable in scope whose type leads to `ty` by one
    /// application or projection; falls back to an introduction form.
    fn elim_var(&mut self, ctx: &Ctx, at: &Loc, ty: &RpcType, fuel: i64) -> RpcTerm {
        let mut options: Vec<RpcTerm> = Vec::new();
        for (x, xty) in ctx.vars.clone() {
            match &xty {
                RpcType::Fun(a, _, b) if b.alpha_eq(ty) && minimal(ctx, a).is_some() => {
                    let arg = self.term(ctx, at, a, fuel - 2);
                    options.push(RpcTerm::app(RpcTerm::var(&x), arg));
                }
                RpcType::Pair(a, _) if a.alpha_eq(ty) => options.push(RpcTerm::proj(1, RpcTerm::var(&x))),
                RpcType::Pair(_, b) if b.alpha_eq(ty) => options.push(RpcTerm::proj(2, RpcTerm::var(&x))),
                _ => {}
            }
        }
        match options.choose(&mut self.rng) {
            Some(t) => t.clone(),
            None => self.intro(ctx, at, ty, fuel, false),
        }
    }
}

/// The smallest term of type `ty` that only introduces, or `None` when a
/// type variable has no variable of that type in scope.
fn minimal(ctx: &Ctx, ty: &RpcType) -> Option<RpcTerm> {
    match ctx.var_of(ty) {
        Some(x) => Some(RpcTerm::var(x)),
        None => structural(ctx, ty),
    }
}

/// Like [`minimal`], but the outermost constructor must be an
/// introduction form rather than a variable.
fn structural(ctx: &Ctx, ty: &RpcType) -> Option<RpcTerm> {
    Some(match ty {
        RpcType::Base(crate::rpc::syntax::BaseType::Int) => RpcTerm::int(0),
        RpcType::Base(crate::rpc::syntax::BaseType::Unit) => RpcTerm::unit(),
        RpcType::Var(_) => return None,
        RpcType::Pair(a, b) => RpcTerm::pair(minimal(ctx, a)?, minimal(ctx, b)?),
        RpcType::Fun(a, l, b) => {
            let x = format!("x{}", ctx.vars.len() + 100);
            RpcTerm::lam(
                l.clone(),
                x.clone(),
                (**a).clone(),
                minimal(&ctx.with_var(&x, a), b)?,
            )
        }
        RpcType::ForallTy(a, body) => RpcTerm::tabs(a.clone(), minimal(&ctx.with_ty(a), body)?),
        RpcType::ForallLoc(l, body) => RpcTerm::labs(l.clone(), minimal(&ctx.with_loc(l), body)?),
    })
}

fn abstract_loc(ty: &RpcType, target: &Loc, var: &Loc, rng: &mut ChaCha8Rng) -> RpcType {
    match ty {
        RpcType::Base(_) | RpcType::Var(_) => ty.clone(),
        RpcType::Fun(a, l, b) => {
            let l = if l == target && rng.gen_bool(0.7) {
                var.clone()
            } else {
                l.clone()
            };
            RpcType::fun(
                abstract_loc(a, target, var, rng),
                l,
                abstract_loc(b, target, var, rng),
            )
        }
        RpcType::Pair(a, b) => RpcType::pair(
            abstract_loc(a, target, var, rng),
            abstract_loc(b, target, var, rng),
        ),
        RpcType::ForallTy(a, body) => RpcType::forall_ty(a.clone(), abstract_loc(body, target, var, rng)),
        // A binder of the same name shadows the target below it.
        RpcType::ForallLoc(l, _) if target.var_name() == Some(l.as_str()) => ty.clone(),
        RpcType::ForallLoc(l, body) => RpcType::forall_loc(l.clone(), abstract_loc(body, target, var, rng)),
    }
}

fn abstract_type(ty: &RpcType, target: &RpcType, var: &RpcType, rng: &mut ChaCha8Rng) -> RpcType {
    if ty == target && rng.gen_bool(0.7) {
        return var.clone();
    }
    match ty {
        RpcType::Base(_) | RpcType::Var(_) => ty.clone(),
        RpcType::Fun(a, l, b) => RpcType::fun(
            abstract_type(a, target, var, rng),
            l.clone(),
            abstract_type(b, target, var, rng),
        ),
        RpcType::Pair(a, b) => RpcType::pair(
            abstract_type(a, target, var, rng),
            abstract_type(b, target, var, rng),
        ),
        RpcType::ForallTy(a, _) if *target == RpcType::Var(a.clone()) => ty.clone(),
        RpcType::ForallTy(a, body) => RpcType::forall_ty(a.clone(), abstract_type(body, target, var, rng)),
        RpcType::ForallLoc(l, body) => RpcType::forall_loc(l.clone(), abstract_type(body, target, var, rng)),
    }
}

/// `n` programs from one seed, deterministically.
pub fn generate(seed: u64, n: usize, cfg: GenConfig) -> Vec<(SourceProgram, RpcType)> {
    let mut g = Generator::new(seed, cfg);
    (0..n).map(|_| g.program()).collect()
}

fn children(t: &RpcTerm) -> Vec<&RpcTerm> {
    match &t.kind {
        TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => vec![],
        TermKind::Lam { body, .. }
        | TermKind::TAbs { body, .. }
        | TermKind::LAbs { body, .. }
        | TermKind::TApp(body, _)
        | TermKind::LApp(body, _)
        | TermKind::Proj(_, body) => vec![body],
        TermKind::App(a, b) | TermKind::Pair(a, b) => vec![a, b],
    }
}

fn positions(t: &RpcTerm, here: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(here.clone());
    for (i, c) in children(t).into_iter().enumerate() {
        here.push(i);
        positions(c, here, out);
        here.pop();
    }
}

fn at_path<'a>(t: &'a RpcTerm, path: &[usize]) -> &'a RpcTerm {
    path.iter().fold(t, |t, &i| children(t)[i])
}

fn replace(t: &RpcTerm, path: &[usize], new: &RpcTerm) -> RpcTerm {
    let Some((&i, rest)) = path.split_first() else {
        return new.clone();
    };
    let sub = |c: &RpcTerm| Box::new(replace(c, rest, new));
    let kind = match &t.kind {
        TermKind::Lam {
            loc,
            param,
            annot,
            body,
        } => TermKind::Lam {
            loc: loc.clone(),
            param: param.clone(),
            annot: annot.clone(),
            body: sub(body),
        },
        TermKind::TAbs { var, body } => TermKind::TAbs {
            var: var.clone(),
            body: sub(body),
        },
        TermKind::LAbs { var, body } => TermKind::LAbs {
            var: var.clone(),
            body: sub(body),
        },
        TermKind::TApp(f, ty) => TermKind::TApp(sub(f), ty.clone()),
        TermKind::LApp(f, l) => TermKind::LApp(sub(f), l.clone()),
        TermKind::Proj(k, p) => TermKind::Proj(*k, sub(p)),
        TermKind::App(a, b) if i == 0 => TermKind::App(sub(a), b.clone()),
        TermKind::App(a, b) => TermKind::App(a.clone(), sub(b)),
        TermKind::Pair(a, b) if i == 0 => TermKind::Pair(sub(a), b.clone()),
        TermKind::Pair(a, b) => TermKind::Pair(a.clone(), sub(b)),
        TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => unreachable!("leaves have no children"),
    };
    RpcTerm::with_span(kind, t.span)
}

/// Smaller variants of `t`: each subterm replaced by one of its children
/// or by a literal. Only closed, well-typed candidates are kept.
pub fn shrink_candidates(t: &RpcTerm) -> Vec<RpcTerm> {
    let mut paths = Vec::new();
    positions(t, &mut Vec::new(), &mut paths);
    let mut out = Vec::new();
    for path in paths {
        let here = at_path(t, &path);
        let size = count_term(here);
        let mut replacements: Vec<RpcTerm> = children(here).into_iter().cloned().collect();
        if size > 1 {
            replacements.push(RpcTerm::int(0));
            replacements.push(RpcTerm::unit());
        }
        for r in replacements {
            let candidate = replace(t, &path, &r);
            if count_term(&candidate) < count_term(t)
                && typecheck_program(&SourceProgram::from_main(candidate.clone()), &Loc::Client).is_ok()
            {
                out.push(candidate);
            }
        }
    }
    out
}

/// Greedily shrinks `t` while `fails` keeps holding.
pub fn shrink(t: &RpcTerm, mut fails: impl FnMut(&RpcTerm) -> bool) -> RpcTerm {
    let mut current = t.clone();
    'outer: for _ in 0..500 {
        for candidate in shrink_candidates(&current) {
            if fails(&candidate) {
                current = candidate;
                continue 'outer;
            }
        }
        break;
    }
    current
}
