//! Typed slicing: a monadic translation that closure-converts every lambda
//! and location abstraction into a named code placed in the client map,
//! the server map, or both.
//!
//! The translation is type-directed, so it re-synthesizes types as it goes
//! (the input is assumed to typecheck). Source binders that shadow an
//! enclosing binder are renamed first, which lets closures capture by name
//! and makes the left-identity shortcut in [`Slicer::bind`] capture-free.

use std::collections::HashSet;

use indexmap::IndexMap;
use thiserror::Error;

use crate::cs::syntax::{Code, CodeRef, CsProgram, CsTerm, CsType, CsValue, OpenCode, Placement};
use crate::loc::Loc;
use crate::names::{rename_away, Fresh};
use crate::rpc::syntax::{RpcTerm, RpcType, SourceProgram, TermKind};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("slicing failed on ill-typed input: {0}")]
pub struct CompileError(pub String);

/// Deliberate miscompilations, for checking that the test harness notices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    /// Emit `call` where `req` belongs and vice versa.
    SwapReqCall,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompileOptions {
    /// Keep every `do x ← unit V; N` the rules produce instead of
    /// substituting `V` right away.
    pub raw: bool,
    pub mutation: Mutation,
}

/// `|A|`, the compilation of value types.
pub fn compile_type_value(ty: &RpcType) -> CsType {
    match ty {
        RpcType::Base(b) => CsType::Base(*b),
        RpcType::Var(a) => CsType::Var(a.clone()),
        RpcType::Fun(a, loc, b) => CsType::clo(CsType::fun(
            compile_type_value(a),
            loc.clone(),
            compile_type_comp(b),
        )),
        RpcType::Pair(a, b) => CsType::pair(compile_type_value(a), compile_type_value(b)),
        RpcType::ForallTy(a, body) => CsType::forall_ty(a.clone(), compile_type_comp(body)),
        RpcType::ForallLoc(l, body) => CsType::clo(CsType::forall_loc(l.clone(), compile_type_comp(body))),
    }
}

/// `C[A] = T |A|`.
pub fn compile_type_comp(ty: &RpcType) -> CsType {
    CsType::monad(compile_type_value(ty))
}

/// Compiles a closed, well-typed program whose `main` runs at the client.
pub fn compile(program: &SourceProgram) -> Result<CsProgram, CompileError> {
    compile_with(program, CompileOptions::default())
}

pub fn compile_with(program: &SourceProgram, opts: CompileOptions) -> Result<CsProgram, CompileError> {
    compile_term(&program.desugar(), opts)
}

pub fn compile_term(term: &RpcTerm, opts: CompileOptions) -> Result<CsProgram, CompileError> {
    let term = uniquify(term, &mut HashSet::new());
    let mut slicer = Slicer {
        opts,
        fresh: Fresh::new(),
        next_code: 1,
        codes: Vec::new(),
        env: Vec::new(),
    };
    let (main, _) = slicer.comp(&Loc::Client, &term)?;
    slicer.codes.sort_by_key(|(n, _, _)| *n);
    let codes: IndexMap<String, Code> = slicer
        .codes
        .into_iter()
        .map(|(_, name, code)| (name, code))
        .collect();
    Ok(CsProgram { main, codes })
}

/// Renames every binder that would shadow a name already in scope.
fn uniquify(term: &RpcTerm, scope: &mut HashSet<String>) -> RpcTerm {
    let span = term.span;
    let enter = |name: &String, body: &RpcTerm, scope: &mut HashSet<String>, kind: u8| {
        let (name, body) = if scope.contains(name) {
            let mut avoid = scope.clone();
            avoid.extend(body.free_vars());
            avoid.extend(body.free_ty_vars());
            avoid.extend(body.free_loc_vars());
            let fresh = rename_away(name, &avoid);
            let body = match kind {
                0 => body.subst(name, &RpcTerm::var(fresh.clone())),
                1 => body.subst_ty(name, &RpcType::Var(fresh.clone())),
                _ => body.subst_loc(name, &Loc::Var(fresh.clone())),
            };
            (fresh, body)
        } else {
            (name.clone(), body.clone())
        };
        let newly = scope.insert(name.clone());
        let body = uniquify(&body, scope);
        if newly {
            scope.remove(&name);
        }
        (name, body)
    };
    let kind = match &term.kind {
        TermKind::Var(_) | TermKind::Int(_) | TermKind::Unit => term.kind.clone(),
        TermKind::Lam {
            loc,
            param,
            annot,
            body,
        } => {
            let (param, body) = enter(param, body, scope, 0);
            TermKind::Lam {
                loc: loc.clone(),
                param,
                annot: annot.clone(),
                body: Box::new(body),
            }
        }
        TermKind::TAbs { var, body } => {
            let (var, body) = enter(var, body, scope, 1);
            TermKind::TAbs {
                var,
                body: Box::new(body),
            }
        }
        TermKind::LAbs { var, body } => {
            let (var, body) = enter(var, body, scope, 2);
            TermKind::LAbs {
                var,
                body: Box::new(body),
            }
        }
        TermKind::App(a, b) => TermKind::App(Box::new(uniquify(a, scope)), Box::new(uniquify(b, scope))),
        TermKind::Pair(a, b) => TermKind::Pair(Box::new(uniquify(a, scope)), Box::new(uniquify(b, scope))),
        TermKind::TApp(t, ty) => TermKind::TApp(Box::new(uniquify(t, scope)), ty.clone()),
        TermKind::LApp(t, loc) => TermKind::LApp(Box::new(uniquify(t, scope)), loc.clone()),
        TermKind::Proj(i, t) => TermKind::Proj(*i, Box::new(uniquify(t, scope))),
    };
    RpcTerm::with_span(kind, span)
}

#[derive(Clone, Debug)]
enum Entry {
    Loc(String),
    Ty(String),
    Var(String, RpcType),
}

struct Slicer {
    opts: CompileOptions,
    fresh: Fresh,
    next_code: usize,
    /// `(number, name, code)`; sorted by number at the end so codes appear
    /// in pre-order even though bodies finish compiling inside-out.
    codes: Vec<(usize, String, Code)>,
    env: Vec<Entry>,
}

fn ill_typed<T>(msg: impl Into<String>) -> Result<T, CompileError> {
    Err(CompileError(msg.into()))
}

impl Slicer {
    fn lookup(&self, x: &str) -> Result<RpcType, CompileError> {
        self.env
            .iter()
            .rev()
            .find_map(|e| match e {
                Entry::Var(y, ty) if y == x => Some(ty.clone()),
                _ => None,
            })
            .ok_or_else(|| CompileError(format!("unbound variable {x}")))
    }

    /// `do x ← m; n`, dropping the bind when `m` is `unit V`.
    fn bind(&self, x: &str, m: CsTerm, n: CsTerm) -> CsTerm {
        match m {
            CsTerm::Val(CsValue::UnitM(v)) if !self.opts.raw => n.subst(x, &v),
            m => CsTerm::Val(CsValue::do_(x, m, n)),
        }
    }

    /// `C[M]` at `at`, with the synthesized source type of `M`.
    fn comp(&mut self, at: &Loc, t: &RpcTerm) -> Result<(CsTerm, RpcType), CompileError> {
        if t.is_value() {
            let (v, ty) = self.value(t)?;
            return Ok((CsTerm::Val(CsValue::unit_m(v)), ty));
        }
        match &t.kind {
            TermKind::App(l, m) => {
                let (cl, fty) = self.comp(at, l)?;
                let RpcType::Fun(_, loc, res) = fty else {
                    return ill_typed(format!("applying a non-function of type {fty}"));
                };
                let (cm, _) = self.comp(at, m)?;
                let f = self.fresh.name();
                let x = self.fresh.name();
                let (fv, xv) = (CsValue::var(&f), CsValue::var(&x));
                let (req, call) = match self.opts.mutation {
                    Mutation::None => (CsValue::req as fn(_, _) -> _, CsValue::call as fn(_, _) -> _),
                    Mutation::SwapReqCall => (CsValue::call as fn(_, _) -> _, CsValue::req as fn(_, _) -> _),
                };
                let apply = if &loc == at {
                    CsTerm::App(fv, xv)
                } else {
                    match (at, &loc) {
                        (Loc::Client, Loc::Server) => CsTerm::Val(req(fv, xv)),
                        (Loc::Server, Loc::Client) => CsTerm::Val(call(fv, xv)),
                        _ => CsTerm::Val(CsValue::gen(loc.clone(), fv, xv)),
                    }
                };
                let inner = self.bind(&x, cm, apply);
                Ok((self.bind(&f, cl, inner), *res))
            }
            TermKind::TApp(m, b) => {
                let (cm, ty) = self.comp(at, m)?;
                let RpcType::ForallTy(a, body) = ty else {
                    return ill_typed(format!("type application of {ty}"));
                };
                let f = self.fresh.name();
                let app = CsTerm::TApp(CsValue::var(&f), compile_type_value(b));
                Ok((self.bind(&f, cm, app), body.subst_ty(&a, b)))
            }
            TermKind::LApp(m, loc) => {
                let (cm, ty) = self.comp(at, m)?;
                let RpcType::ForallLoc(l, body) = ty else {
                    return ill_typed(format!("location application of {ty}"));
                };
                let f = self.fresh.name();
                let app = CsTerm::LApp(CsValue::var(&f), loc.clone());
                Ok((self.bind(&f, cm, app), body.subst_loc(&l, loc)))
            }
            TermKind::Pair(l, m) => {
                let (cl, lty) = self.comp(at, l)?;
                let (cm, mty) = self.comp(at, m)?;
                let x = self.fresh.name();
                let y = self.fresh.name();
                let ret = CsTerm::Val(CsValue::unit_m(CsValue::pair(CsValue::var(&x), CsValue::var(&y))));
                let inner = self.bind(&y, cm, ret);
                Ok((self.bind(&x, cl, inner), RpcType::pair(lty, mty)))
            }
            TermKind::Proj(i, m) => {
                let (cm, ty) = self.comp(at, m)?;
                let RpcType::Pair(a, b) = ty else {
                    return ill_typed(format!("projection of {ty}"));
                };
                let p = self.fresh.name();
                let x = self.fresh.name();
                let proj = CsTerm::let_(
                    &x,
                    CsTerm::Proj(*i, CsValue::var(&p)),
                    CsTerm::Val(CsValue::unit_m(CsValue::var(&x))),
                );
                Ok((self.bind(&p, cm, proj), if *i == 1 { *a } else { *b }))
            }
            _ => ill_typed("unexpected non-value"),
        }
    }

    /// `|V|`, with the synthesized source type of `V`.
    fn value(&mut self, t: &RpcTerm) -> Result<(CsValue, RpcType), CompileError> {
        match &t.kind {
            TermKind::Var(x) => Ok((CsValue::var(x), self.lookup(x)?)),
            TermKind::Int(n) => Ok((CsValue::Int(*n), RpcType::INT)),
            TermKind::Unit => Ok((CsValue::Unit, RpcType::UNIT)),
            TermKind::Pair(a, b) => {
                let (va, ta) = self.value(a)?;
                let (vb, tb) = self.value(b)?;
                Ok((CsValue::pair(va, vb), RpcType::pair(ta, tb)))
            }
            TermKind::TAbs { var, body } => {
                self.env.push(Entry::Ty(var.clone()));
                let inner = self.value(body);
                self.env.pop();
                let (v, ty) = inner?;
                Ok((
                    CsValue::TAbs(var.clone(), Box::new(CsValue::unit_m(v))),
                    RpcType::forall_ty(var.clone(), ty),
                ))
            }
            TermKind::Lam {
                loc,
                param,
                annot,
                body,
            } => {
                let number = self.take_code_number();
                self.env.push(Entry::Var(param.clone(), annot.clone()));
                let inner = self.comp(loc, body);
                self.env.pop();
                let (cbody, res) = inner?;
                let ty = RpcType::fun(annot.clone(), loc.clone(), res.clone());
                let placement = match loc {
                    Loc::Client => Placement::Client,
                    Loc::Server => Placement::Server,
                    Loc::Var(_) => Placement::Common,
                };
                let open = OpenCode::Lam {
                    param: param.clone(),
                    param_ty: compile_type_value(annot),
                    loc: loc.clone(),
                    res_ty: compile_type_comp(&res),
                    body: cbody,
                };
                let v = self.close(number, t, &ty, open, placement)?;
                Ok((v, ty))
            }
            TermKind::LAbs { var, body } => {
                let number = self.take_code_number();
                self.env.push(Entry::Loc(var.clone()));
                let inner = self.value(body);
                self.env.pop();
                let (v, body_ty) = inner?;
                let ty = RpcType::forall_loc(var.clone(), body_ty.clone());
                let open = OpenCode::LAbs {
                    var: var.clone(),
                    body_ty: compile_type_comp(&body_ty),
                    body: CsValue::unit_m(v),
                };
                let v = self.close(number, t, &ty, open, Placement::Common)?;
                Ok((v, ty))
            }
            _ => ill_typed("expected a value"),
        }
    }

    fn take_code_number(&mut self) -> usize {
        let n = self.next_code;
        self.next_code += 1;
        n
    }

    /// Emits the code for abstraction `t` and returns its closure. The
    /// closure captures the free term variables of `t` in order of first
    /// occurrence; the code prefix lists, in environment order, the
    /// location and type variables the code mentions.
    fn close(
        &mut self,
        number: usize,
        t: &RpcTerm,
        ty: &RpcType,
        open: OpenCode,
        placement: Placement,
    ) -> Result<CsValue, CompileError> {
        let captured = t.free_vars_ordered();
        let mut env = Vec::new();
        let mut locs: HashSet<String> = t.free_loc_vars();
        let mut tys: HashSet<String> = t.free_ty_vars();
        locs.extend(ty.free_loc_vars());
        tys.extend(ty.free_ty_vars());
        for z in &captured {
            let zty = self.lookup(z)?;
            locs.extend(zty.free_loc_vars());
            tys.extend(zty.free_ty_vars());
            env.push((z.clone(), compile_type_value(&zty)));
        }
        let mut loc_params = Vec::new();
        let mut ty_params = Vec::new();
        for e in &self.env {
            match e {
                Entry::Loc(l) if locs.contains(l) && !loc_params.contains(l) => loc_params.push(l.clone()),
                Entry::Ty(a) if tys.contains(a) && !ty_params.contains(a) => ty_params.push(a.clone()),
                _ => {}
            }
        }
        let name = format!("f{number}");
        let code_ref = CodeRef {
            name: name.clone(),
            loc_args: loc_params.iter().map(|l| Loc::Var(l.clone())).collect(),
            ty_args: ty_params.iter().map(|a| CsType::Var(a.clone())).collect(),
        };
        self.codes.push((
            number,
            name,
            Code {
                loc_params,
                ty_params,
                env,
                open,
                placement,
            },
        ));
        Ok(CsValue::Clo(
            captured.into_iter().map(CsValue::Var).collect(),
            code_ref,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::typeck::typecheck_program;
    use crate::surface::parse_term;

    const RUNNING: &str = r"({l}. \(g : Int -client-> Int) @ l . g 1) {server} (\(x : Int) @ client . x)";

    fn normalize(s: &str) -> String {
        let mut out = String::new();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '_' && chars.peek() == Some(&'g') {
                chars.next();
                while chars.peek().is_some_and(char::is_ascii_digit) {
                    chars.next();
                }
                out.push('h');
            } else {
                out.push(c);
            }
        }
        out
    }

    #[test]
    fn running_example_main_and_codes() {
        let prog = compile_term(&parse_term(RUNNING).unwrap(), CompileOptions::default()).unwrap();
        assert_eq!(
            normalize(&prog.main.to_string()),
            "do h <- clo([], f1) {server}; req(h, clo([], f3))"
        );
        let names: Vec<_> = prog.codes.keys().cloned().collect();
        assert_eq!(names, ["f1", "f2", "f3"]);
        assert_eq!(prog.codes["f1"].placement, Placement::Common);
        assert_eq!(prog.codes["f2"].placement, Placement::Common);
        assert_eq!(prog.codes["f3"].placement, Placement::Client);
        assert_eq!(prog.codes["f2"].loc_params, ["l"]);
        let OpenCode::Lam { body, .. } = &prog.codes["f2"].open else {
            panic!("f2 should be a lambda code")
        };
        assert_eq!(body.to_string(), "gen(client, g, 1)");
        let ty = typecheck_program(&prog).unwrap();
        assert_eq!(ty, CsType::monad(CsType::INT));
    }

    #[test]
    fn type_compilation() {
        assert_eq!(compile_type_value(&RpcType::INT), CsType::INT);
        let f = RpcType::fun(RpcType::INT, Loc::Client, RpcType::INT);
        assert_eq!(compile_type_value(&f).to_string(), "Clo(Int -client-> T Int)");
        let poly = RpcType::forall_loc("l", RpcType::fun(f, Loc::var("l"), RpcType::INT));
        assert_eq!(
            compile_type_value(&poly).to_string(),
            "Clo({l}. T Clo(Clo(Int -client-> T Int) -l-> T Int))"
        );
    }

    #[test]
    fn server_lambda_goes_to_the_server_map() {
        let prog = compile_term(
            &parse_term(r"\(x : Int) @ server . x").unwrap(),
            CompileOptions::default(),
        )
        .unwrap();
        assert_eq!(prog.main.to_string(), "unit clo([], f1)");
        assert_eq!(prog.codes["f1"].placement, Placement::Server);
    }

    #[test]
    fn raw_mode_keeps_every_bind() {
        let opts = CompileOptions {
            raw: true,
            ..CompileOptions::default()
        };
        let prog = compile_term(&parse_term(RUNNING).unwrap(), opts).unwrap();
        assert_eq!(
            normalize(&prog.main.to_string()),
            "do h <- (do h <- unit clo([], f1); h {server}); do h <- unit clo([], f3); req(h, h)"
        );
        typecheck_program(&prog).unwrap();
    }

    #[test]
    fn shadowed_binders_are_renamed_before_capture() {
        let t = parse_term(r"(\(x : Int) @ client . (\(x : Int) @ server . x, x)) 3").unwrap();
        let prog = compile_term(&t, CompileOptions::default()).unwrap();
        typecheck_program(&prog).unwrap();
    }
}
