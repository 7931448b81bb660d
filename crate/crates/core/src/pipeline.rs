//! The whole pipeline, stage by stage, and the obligations the differential
//! harness checks between stages.

use std::fmt;

use thiserror::Error;

use crate::cs::machine::{budget_from_env, run_cs, CsCounters, MachineError, RunOptions, TraceStep};
use crate::cs::syntax::{CsProgram, CsValue};
use crate::cs::typeck::{typecheck_program as typecheck_cs, CsTypeError};
use crate::erasure::{erase_value, erase_with, EraseError, EraseOptions, UValue, UntypedProgram};
use crate::loc::{Loc, Side};
use crate::rpc::eval::{eval_with_limit, EvalCounters, EvalError, DEFAULT_DEPTH_LIMIT};
use crate::rpc::mono::{monomorphise, MonoError};
use crate::rpc::syntax::{RpcTerm, RpcType, SourceProgram, TermKind};
use crate::rpc::typeck::{typecheck_program, TypeError};
use crate::runtime::{
    rewrite_program, run_pair, Law, PairRun, RuntimeCounters, RuntimeError, RuntimeOptions, Transport,
};
use crate::slicer::{compile_type_comp, compile_with, optimize, CompileError, CompileOptions, Mutation};
use crate::surface::{count_nodes, parse_program, SyntaxError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Dynamic,
    Mono,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Rpc,
    Cs,
    Untyped,
}

#[derive(Clone, Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("type error at {0}")]
    Type(#[from] TypeError),
    #[error("{0}")]
    Mono(#[from] MonoError),
    #[error("{0}")]
    Compile(#[from] CompileError),
    #[error("compiled program is ill-typed: {0}")]
    CsType(#[from] CsTypeError),
    #[error("{0}")]
    Machine(#[from] MachineError),
    #[error("{0}")]
    Erase(#[from] EraseError),
    #[error("{0}")]
    Runtime(#[from] RuntimeError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("stages disagree: {0}")]
    Mismatch(String),
}

impl PipelineError {
    /// 1 for errors in the input, 3 for protocol and transport failures and
    /// 2 for everything that indicates a bug in the pipeline itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Syntax(_) | PipelineError::Type(_) => 1,
            PipelineError::Runtime(e) if e.is_protocol() => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub mode: Mode,
    pub budget: Option<usize>,
    pub transport: Transport,
    pub mutation: Mutation,
    pub erase: EraseOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            mode: Mode::Dynamic,
            budget: None,
            transport: Transport::Lockstep,
            mutation: Mutation::None,
            erase: EraseOptions::default(),
        }
    }
}

impl PipelineOptions {
    pub fn budget(&self) -> usize {
        self.budget.unwrap_or_else(budget_from_env)
    }

    fn runtime(&self) -> RuntimeOptions {
        RuntimeOptions {
            budget: self.budget(),
        }
    }

    fn compile(&self) -> CompileOptions {
        CompileOptions {
            raw: false,
            mutation: self.mutation,
        }
    }
}

/// Big-step evaluation and deep substitutions recurse on the host stack,
/// so whole-program work runs on a thread with room to spare.
pub fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(512 << 20)
            .spawn_scoped(s, f)
            .expect("spawning a worker thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}

/// Parses and typechecks a source file at `at`.
pub fn load(src: &str, at: Side) -> Result<(SourceProgram, RpcType), PipelineError> {
    let program = parse_program(src)?;
    let ty = typecheck_program(&program, &Loc::from(at))?;
    Ok((program, ty))
}

/// The source program the later stages start from.
pub fn prepare(program: &SourceProgram, mode: Mode) -> Result<SourceProgram, PipelineError> {
    Ok(match mode {
        Mode::Dynamic => program.clone(),
        Mode::Mono => monomorphise(program)?,
    })
}

pub fn run_rpc(program: &SourceProgram, at: Side) -> Result<(RpcTerm, EvalCounters), PipelineError> {
    let term = program.desugar();
    let mut counters = EvalCounters::default();
    let v = eval_with_limit(&term, at, &mut counters, DEFAULT_DEPTH_LIMIT)?;
    Ok((v, counters))
}

/// Compiles and gen-specializes a (possibly monomorphised) program.
pub fn compile_stage(program: &SourceProgram, opts: &PipelineOptions) -> Result<CsProgram, PipelineError> {
    let prepared = prepare(program, opts.mode)?;
    let compiled = compile_with(&prepared, opts.compile())?;
    Ok(optimize(&compiled))
}

pub fn erase_stage(cs: &CsProgram, opts: &PipelineOptions) -> Result<UntypedProgram, PipelineError> {
    Ok(erase_with(cs, opts.erase)?)
}

#[derive(Clone, Debug)]
pub struct CsOutcome {
    pub value: CsValue,
    pub counters: CsCounters,
    pub trace: Vec<TraceStep>,
}

pub fn run_cs_stage(
    cs: &CsProgram,
    verify: bool,
    trace: bool,
    opts: &PipelineOptions,
) -> Result<CsOutcome, PipelineError> {
    let run = run_cs(
        cs,
        &RunOptions {
            verify,
            trace,
            budget: Some(opts.budget()),
        },
    )?;
    Ok(CsOutcome {
        value: run.value,
        counters: run.counters,
        trace: run.trace,
    })
}

pub fn run_untyped_stage(prog: &UntypedProgram, opts: &PipelineOptions) -> Result<PairRun, PipelineError> {
    Ok(run_pair(prog, opts.transport, &opts.runtime())?)
}

/// What can be compared across stages: first-order data exactly, and of
/// functions only that they are functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observable {
    Int(i64),
    Unit,
    Pair(Box<Observable>, Box<Observable>),
    Closure,
    TypeAbs,
    /// Not a value of any stage; compares unequal to everything else.
    Other(String),
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Int(n) => write!(f, "{n}"),
            Observable::Unit => f.write_str("()"),
            Observable::Pair(a, b) => write!(f, "({a}, {b})"),
            Observable::Closure => f.write_str("<closure>"),
            Observable::TypeAbs => f.write_str("<type abstraction>"),
            Observable::Other(s) => write!(f, "<{s}>"),
        }
    }
}

pub fn observe_rpc(v: &RpcTerm) -> Observable {
    match &v.kind {
        TermKind::Int(n) => Observable::Int(*n),
        TermKind::Unit => Observable::Unit,
        TermKind::Pair(a, b) => Observable::Pair(Box::new(observe_rpc(a)), Box::new(observe_rpc(b))),
        TermKind::Lam { .. } | TermKind::LAbs { .. } => Observable::Closure,
        TermKind::TAbs { .. } => Observable::TypeAbs,
        _ => Observable::Other(crate::surface::pretty_term(v)),
    }
}

/// What the monomorphised program should produce for a source value: a
/// location abstraction becomes the pair of its client and server
/// instances.
pub fn observe_mono(v: &RpcTerm) -> Observable {
    match &v.kind {
        TermKind::LAbs { var, body } => Observable::Pair(
            Box::new(observe_mono(&body.subst_loc(var, &Loc::Client))),
            Box::new(observe_mono(&body.subst_loc(var, &Loc::Server))),
        ),
        TermKind::Pair(a, b) => Observable::Pair(Box::new(observe_mono(a)), Box::new(observe_mono(b))),
        _ => observe_rpc(v),
    }
}

pub fn observe_cs(v: &CsValue) -> Observable {
    match v {
        CsValue::Int(n) => Observable::Int(*n),
        CsValue::Unit => Observable::Unit,
        CsValue::Pair(a, b) => Observable::Pair(Box::new(observe_cs(a)), Box::new(observe_cs(b))),
        CsValue::Clo(..) => Observable::Closure,
        CsValue::TAbs(..) => Observable::TypeAbs,
        other => Observable::Other(other.to_string()),
    }
}

/// Erased values do not remember type abstraction; closures are the only
/// functions.
pub fn observe_untyped(v: &UValue) -> Observable {
    match v {
        UValue::Int { v } => Observable::Int(*v),
        UValue::Unit => Observable::Unit,
        UValue::Pair { l, r } => Observable::Pair(Box::new(observe_untyped(l)), Box::new(observe_untyped(r))),
        UValue::Closure { .. } => Observable::Closure,
        other => Observable::Other(other.to_string()),
    }
}

/// Forgets type abstractions, for comparing with erased values.
fn strip_type_abs(o: &Observable, cs: &CsValue) -> Observable {
    match (o, cs) {
        (_, CsValue::TAbs(_, body)) => match &**body {
            CsValue::UnitM(inner) => strip_type_abs(&observe_cs(inner), inner),
            _ => o.clone(),
        },
        (Observable::Pair(..), CsValue::Pair(a, b)) => Observable::Pair(
            Box::new(strip_type_abs(&observe_cs(a), a)),
            Box::new(strip_type_abs(&observe_cs(b), b)),
        ),
        _ => o.clone(),
    }
}

/// Everything one run of the pipeline produced.
#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub source: Observable,
    pub mono: Option<Observable>,
    pub cs: Observable,
    pub untyped: Observable,
    pub beta_apps: u64,
    pub cs_counters: CsCounters,
    pub runtime: RuntimeCounters,
    pub source_nodes: usize,
    pub mono_nodes: Option<usize>,
    pub cs_size: usize,
    pub cs_gens: usize,
    pub pass: bool,
}

impl fmt::Display for PipelineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source value    {}", self.source)?;
        if let Some(m) = &self.mono {
            writeln!(f, "mono value      {m}")?;
        }
        writeln!(f, "cs value        {}", self.cs)?;
        writeln!(f, "untyped value   {}", self.untyped)?;
        writeln!(f, "beta_apps       {}", self.beta_apps)?;
        writeln!(f, "gen_checks      {}", self.cs_counters.gen_checks)?;
        writeln!(f, "local_apps      {}", self.cs_counters.local_apps)?;
        writeln!(f, "remote_msgs     {}", self.cs_counters.remote_msgs)?;
        writeln!(f, "wire_msgs       {}", self.runtime.wire_msgs)?;
        writeln!(f, "dyn_checks      {}", self.runtime.dyn_checks)?;
        write!(f, "nodes           source={}", self.source_nodes)?;
        if let Some(m) = self.mono_nodes {
            write!(f, " mono={m}")?;
        }
        writeln!(f, " cs={} gens={}", self.cs_size, self.cs_gens)?;
        write!(f, "verdict         {}", if self.pass { "pass" } else { "FAIL" })
    }
}

/// Runs every stage of a typechecked client program.
pub fn report(program: &SourceProgram, opts: &PipelineOptions) -> Result<PipelineReport, PipelineError> {
    let (value, counters) = run_rpc(program, Side::Client)?;
    let source = observe_rpc(&value);
    let (mono, mono_nodes) = if opts.mode == Mode::Mono {
        let m = prepare(program, Mode::Mono)?;
        let (v, _) = run_rpc(&m, Side::Client)?;
        (Some(observe_rpc(&v)), Some(count_nodes(&m)))
    } else {
        (None, None)
    };
    let cs_prog = compile_stage(program, opts)?;
    let cs_run = run_cs_stage(&cs_prog, false, false, opts)?;
    let untyped = erase_stage(&cs_prog, opts)?;
    let pair = run_untyped_stage(&untyped, opts)?;
    let cs = observe_cs(&cs_run.value);
    let un = observe_untyped(&pair.value);
    let pass = source == cs
        && mono.as_ref().is_none_or(|m| *m == observe_mono(&value))
        && strip_type_abs(&cs, &cs_run.value) == un;
    Ok(PipelineReport {
        source,
        mono,
        cs,
        untyped: un,
        beta_apps: counters.beta_apps,
        cs_counters: cs_run.counters,
        runtime: pair.totals(),
        source_nodes: count_nodes(program),
        mono_nodes,
        cs_size: cs_prog.size(),
        cs_gens: cs_prog.count_gens(),
        pass,
    })
}

/// One checked property of one program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Obligation {
    fn new(name: &'static str, result: Result<(), String>) -> Obligation {
        match result {
            Ok(()) => Obligation {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => Obligation {
                name,
                passed: false,
                detail,
            },
        }
    }
}

pub const OBLIGATIONS: [&str; 6] = ["a", "b", "c", "d", "e", "mono"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiffOptions {
    pub pipeline: PipelineOptions,
    /// Also run over sockets and compare with the lockstep run.
    pub sockets: bool,
}

/// Checks every obligation on a well-typed client program:
///
/// * `a` — the compiled program, before and after gen-specialization,
///   typechecks at `T |A|`;
/// * `b` — the source and CS values agree;
/// * `c` — the erased program computes the erasure of the CS value, using
///   the same number of messages as the CS machine;
/// * `d` — gen-specialization and the monad-law rewrites do not change the
///   erased program's value or conversation;
/// * `e` — every CS step preserves the configuration type;
/// * `mono` — the monomorphised program agrees with the original and its
///   specialized compilation has no `gen` left.
pub fn check_obligations(program: &SourceProgram, ty: &RpcType, opts: &DiffOptions) -> Vec<Obligation> {
    let p = opts.pipeline;
    let copts = p.compile();
    let want = compile_type_comp(ty);
    let compiled = compile_with(program, copts).map_err(|e| e.to_string());
    let optimized = compiled.as_ref().map(optimize).map_err(Clone::clone);

    let a = (|| {
        for (what, prog) in [("compiled", &compiled), ("optimized", &optimized)] {
            let prog = prog.as_ref().map_err(Clone::clone)?;
            let got = typecheck_cs(prog).map_err(|e| format!("{what}: {e}"))?;
            if !got.alpha_eq(&want) {
                return Err(format!("{what}: has type {got}, expected {want}"));
            }
        }
        Ok(())
    })();

    let source = run_rpc(program, Side::Client).map_err(|e| e.to_string());
    let cs_run = compiled
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|c| run_cs_stage(c, false, false, &p).map_err(|e| e.to_string()));

    let b = (|| {
        let (v, _) = source.as_ref().map_err(Clone::clone)?;
        let run = cs_run.as_ref().map_err(Clone::clone)?;
        let (src, cs) = (observe_rpc(v), observe_cs(&run.value));
        if src != cs {
            return Err(format!("source gives {src}, cs gives {cs}"));
        }
        Ok(())
    })();

    let erased = compiled
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|c| erase_with(c, p.erase).map_err(|e| e.to_string()));
    let pair = erased
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|u| run_pair(u, Transport::Lockstep, &p.runtime()).map_err(|e| e.to_string()));

    let c = (|| {
        let run = cs_run.as_ref().map_err(Clone::clone)?;
        let pair = pair.as_ref().map_err(Clone::clone)?;
        let mirror = erase_value(&run.value, Side::Client).map_err(|e| e.to_string())?;
        if mirror != pair.value {
            return Err(format!(
                "cs value erases to {mirror}, untyped run gives {}",
                pair.value
            ));
        }
        if run.counters.remote_msgs != pair.messages.len() {
            return Err(format!(
                "cs machine exchanged {} messages, untyped run {}",
                run.counters.remote_msgs,
                pair.messages.len()
            ));
        }
        if opts.sockets {
            let sock = run_pair(
                erased.as_ref().map_err(Clone::clone)?,
                Transport::Socket,
                &p.runtime(),
            )
            .map_err(|e| format!("socket: {e}"))?;
            if sock.value != pair.value || sock.messages != pair.messages {
                return Err("socket and lockstep runs differ".into());
            }
        }
        Ok(())
    })();

    let d = (|| {
        let base = pair.as_ref().map_err(Clone::clone)?;
        let opt = optimized.as_ref().map_err(Clone::clone)?;
        let opt_erased = erase_with(opt, p.erase).map_err(|e| e.to_string())?;
        let opt_run = run_pair(&opt_erased, Transport::Lockstep, &p.runtime())
            .map_err(|e| format!("optimized: {e}"))?;
        if opt_run.value != base.value {
            return Err(format!(
                "optimized program gives {}, original {}",
                opt_run.value, base.value
            ));
        }
        let erased = erased.as_ref().map_err(Clone::clone)?;
        for prog in [erased, &opt_erased] {
            for law in Law::ALL {
                let (rewritten, _) = rewrite_program(prog, law);
                let run = run_pair(&rewritten, Transport::Lockstep, &p.runtime())
                    .map_err(|e| format!("{law:?}: {e}"))?;
                if run.value != base.value {
                    return Err(format!(
                        "{law:?} rewrite gives {}, original {}",
                        run.value, base.value
                    ));
                }
            }
        }
        Ok(())
    })();

    let e = compiled.as_ref().map_err(Clone::clone).and_then(|c| {
        run_cs_stage(c, true, false, &p)
            .map(|_| ())
            .map_err(|e| e.to_string())
    });

    let mono = (|| {
        let (v, _) = source.as_ref().map_err(Clone::clone)?;
        let m = monomorphise(program).map_err(|e| e.to_string())?;
        typecheck_program(&m, &Loc::Client).map_err(|e| format!("monomorphised program: {e}"))?;
        let (mv, _) = run_rpc(&m, Side::Client).map_err(|e| e.to_string())?;
        if observe_rpc(&mv) != observe_mono(v) {
            return Err(format!(
                "monomorphised program gives {}, expected {}",
                observe_rpc(&mv),
                observe_mono(v)
            ));
        }
        let cs = optimize(&compile_with(&m, copts).map_err(|e| e.to_string())?);
        if cs.count_gens() != 0 {
            return Err(format!("{} gen nodes survive specialization", cs.count_gens()));
        }
        Ok(())
    })();

    vec![
        Obligation::new("a", a),
        Obligation::new("b", b),
        Obligation::new("c", c),
        Obligation::new("d", d),
        Obligation::new("e", e),
        Obligation::new("mono", mono),
    ]
}
