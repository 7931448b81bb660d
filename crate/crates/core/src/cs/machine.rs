//! The small-step configuration machine.
//!
//! The running side's term is kept as a zipper: `focus` plus the frames of
//! the evaluation context around it, outermost first. Frames follow the
//! context grammar `E ::= E_let | do x ← E; M`: do-frames are never pushed
//! on top of a let-frame, since a `do` in let-bound position is already a
//! value. Moving the focus (refocusing) is not a rule and is not counted.

use std::fmt;

use thiserror::Error;

use crate::cs::syntax::{Code, CodeRef, CsProgram, CsTerm, CsType, CsValue, OpenCode};
use crate::cs::typeck::typecheck_config;
use crate::loc::Side;

/// Step budget used when neither the caller nor `POLYRPC_BUDGET` says
/// otherwise.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Reads `POLYRPC_BUDGET`, falling back to [`DEFAULT_BUDGET`].
pub fn budget_from_env() -> usize {
    std::env::var("POLYRPC_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    /// `let x = [] in N`
    Let(String, CsTerm),
    /// `do x ← []; N`
    Do(String, CsTerm),
}

impl Frame {
    pub fn plug(&self, inner: CsTerm) -> CsTerm {
        match self {
            Frame::Let(x, n) => CsTerm::let_(x.clone(), inner, n.clone()),
            Frame::Do(x, n) => CsTerm::Val(CsValue::do_(x.clone(), inner, n.clone())),
        }
    }

    /// Plugs `inner` into a whole context given outermost frame first.
    pub fn plug_all(frames: &[Frame], inner: CsTerm) -> CsTerm {
        frames.iter().rev().fold(inner, |t, f| f.plug(t))
    }
}

/// Renders a stacked context with its hole as `[]`.
pub fn pretty_context(frames: &[Frame]) -> String {
    Frame::plug_all(frames, CsTerm::Val(CsValue::var("[]"))).to_string()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub active: Side,
    pub focus: CsTerm,
    /// Context around the focus, outermost first.
    pub frames: Vec<Frame>,
    /// Suspended contexts; the top of each stack is the last element.
    pub client_stack: Vec<Vec<Frame>>,
    pub server_stack: Vec<Vec<Frame>>,
}

impl Configuration {
    /// `⟨main; ε | ε⟩`
    pub fn initial(main: CsTerm) -> Configuration {
        Configuration {
            active: Side::Client,
            focus: main,
            frames: Vec::new(),
            client_stack: Vec::new(),
            server_stack: Vec::new(),
        }
    }

    /// The running term with its context plugged back in.
    pub fn active_term(&self) -> CsTerm {
        Frame::plug_all(&self.frames, self.focus.clone())
    }

    fn stack_mut(&mut self, side: Side) -> &mut Vec<Vec<Frame>> {
        match side {
            Side::Client => &mut self.client_stack,
            Side::Server => &mut self.server_stack,
        }
    }

    fn stack(&self, side: Side) -> &[Vec<Frame>] {
        match side {
            Side::Client => &self.client_stack,
            Side::Server => &self.server_stack,
        }
    }

    /// Descends into let-bound terms and do-bound computations until the
    /// focus is a redex or a value with nothing left to decompose.
    fn refocus(&mut self) {
        loop {
            let top_is_let = matches!(self.frames.last(), Some(Frame::Let(..)));
            match std::mem::replace(&mut self.focus, CsTerm::Val(CsValue::Unit)) {
                CsTerm::Let(x, m, n) => {
                    self.frames.push(Frame::Let(x, *n));
                    self.focus = *m;
                }
                CsTerm::Val(CsValue::Do(x, m, n)) if !top_is_let => {
                    self.frames.push(Frame::Do(x, *n));
                    self.focus = *m;
                }
                other => {
                    self.focus = other;
                    return;
                }
            }
        }
    }
}

fn write_stack(f: &mut fmt::Formatter<'_>, stack: &[Vec<Frame>]) -> fmt::Result {
    for (i, ctx) in stack.iter().rev().enumerate() {
        if i > 0 {
            f.write_str("; ")?;
        }
        f.write_str(&pretty_context(ctx))?;
    }
    Ok(())
}

impl fmt::Display for Configuration {
    /// `⟨M; Δc | Δs⟩` or `⟨Δc | M; Δs⟩`, with `ε` for an empty stack that
    /// stands alone.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = self.active_term();
        f.write_str("⟨")?;
        for side in [Side::Client, Side::Server] {
            if side == Side::Server {
                f.write_str(" | ")?;
            }
            let stack = self.stack(side);
            if side == self.active {
                write!(f, "{term}")?;
                if !stack.is_empty() {
                    f.write_str("; ")?;
                    write_stack(f, stack)?;
                }
            } else if stack.is_empty() {
                f.write_str("ε")?;
            } else {
                write_stack(f, stack)?;
            }
        }
        f.write_str("⟩")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Let,
    Do,
    Proj,
    TApp,
    App,
    LApp,
    Req,
    Call,
    UnitC,
    UnitS,
    UnitSE,
    /// `gen(c, …)` while the client runs.
    GenCC,
    /// `gen(s, …)` while the client runs.
    GenSC,
    /// `gen(c, …)` while the server runs.
    GenCS,
    /// `gen(s, …)` while the server runs.
    GenSS,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Let => "E-Let",
            Rule::Do => "E-Do",
            Rule::Proj => "E-Proj",
            Rule::TApp => "E-TApp",
            Rule::App => "E-App",
            Rule::LApp => "E-LApp",
            Rule::Req => "E-Req",
            Rule::Call => "E-Call",
            Rule::UnitC => "E-Unit-C",
            Rule::UnitS => "E-Unit-S",
            Rule::UnitSE => "E-Unit-S-E",
            Rule::GenCC => "E-Gen-C-C",
            Rule::GenSC => "E-Gen-S-C",
            Rule::GenCS => "E-Gen-C-S",
            Rule::GenSS => "E-Gen-S-S",
        }
    }

    pub fn is_gen(self) -> bool {
        matches!(self, Rule::GenCC | Rule::GenSC | Rule::GenCS | Rule::GenSS)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CsCounters {
    pub steps: usize,
    pub gen_checks: usize,
    pub local_apps: usize,
    pub remote_msgs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("stuck: missing code {name} at {side}")]
    MissingCode { name: String, side: Side },
    #[error("stuck: no rule applies to {0}")]
    NoRule(String),
    #[error("step budget of {0} exhausted")]
    Budget(usize),
    #[error("configuration check failed after step {step}: {message}")]
    Verify { step: usize, message: String },
}

/// One fired rule, for `--trace`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: Rule,
    /// Side that was running when the rule fired.
    pub side: Side,
    pub redex: String,
    /// Stack depths after the step.
    pub depths: (usize, usize),
    /// The configuration after the step.
    pub config: String,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} {:<6} c={} s={}  {}  ==>  {}",
            self.rule.name(),
            self.side.keyword(),
            self.depths.0,
            self.depths.1,
            self.redex,
            self.config
        )
    }
}

pub enum Outcome {
    Stepped(Rule),
    Done(CsValue),
}

pub struct Machine<'p> {
    prog: &'p CsProgram,
    pub conf: Configuration,
    pub counters: CsCounters,
}

impl<'p> Machine<'p> {
    pub fn new(prog: &'p CsProgram) -> Machine<'p> {
        let mut conf = Configuration::initial(prog.main.clone());
        conf.refocus();
        Machine {
            prog,
            conf,
            counters: CsCounters::default(),
        }
    }

    fn code(&self, code_ref: &CodeRef) -> Result<&'p Code, MachineError> {
        self.prog
            .lookup(self.conf.active, &code_ref.name)
            .ok_or_else(|| MachineError::MissingCode {
                name: code_ref.name.clone(),
                side: self.conf.active,
            })
    }

    /// Text of the redex about to fire, including the frame it consumes.
    pub fn redex(&self) -> String {
        let conf = &self.conf;
        let returns = matches!(
            (&conf.focus, conf.frames.last()),
            (CsTerm::Val(_), Some(Frame::Let(..))) | (CsTerm::Val(CsValue::UnitM(_)), Some(Frame::Do(..)))
        );
        if returns {
            conf.frames.last().unwrap().plug(conf.focus.clone()).to_string()
        } else {
            conf.focus.to_string()
        }
    }

    fn no_rule(&self) -> MachineError {
        MachineError::NoRule(self.conf.to_string())
    }

    fn set_focus(&mut self, t: CsTerm) {
        self.conf.focus = t;
    }

    /// Transfers control: the running context is suspended on the running
    /// side's stack and `term` starts on the other side.
    fn transfer(&mut self, term: CsTerm) {
        let from = self.conf.active;
        let frames = std::mem::take(&mut self.conf.frames);
        self.conf.stack_mut(from).push(frames);
        self.conf.active = from.other();
        self.conf.focus = term;
        self.counters.remote_msgs += 1;
    }

    /// Applies exactly one rule.
    pub fn step(&mut self) -> Result<Outcome, MachineError> {
        let active = self.conf.active;
        let rule = match (self.conf.focus.clone(), self.conf.frames.last().cloned()) {
            (CsTerm::Val(v), Some(Frame::Let(x, n))) => {
                self.conf.frames.pop();
                self.set_focus(n.subst(&x, &v));
                Rule::Let
            }
            (CsTerm::Val(CsValue::UnitM(v)), Some(Frame::Do(x, n))) => {
                self.conf.frames.pop();
                self.set_focus(n.subst(&x, &v));
                Rule::Do
            }
            (CsTerm::Proj(i, CsValue::Pair(a, b)), _) => {
                self.set_focus(CsTerm::Val(if i == 1 { *a } else { *b }));
                Rule::Proj
            }
            (CsTerm::TApp(CsValue::TAbs(a, body), ty), _) => {
                self.set_focus(CsTerm::Val(body.subst_ty(&a, &ty)));
                Rule::TApp
            }
            (CsTerm::App(CsValue::Clo(env, code_ref), arg), _) => {
                let code = self.code(&code_ref)?;
                let OpenCode::Lam { param, body, .. } = &code.open else {
                    return Err(self.no_rule());
                };
                let body = instantiate(code, &code_ref, &env, body.clone());
                self.set_focus(body.subst(param, &arg));
                self.counters.local_apps += 1;
                Rule::App
            }
            (CsTerm::LApp(CsValue::Clo(env, code_ref), loc), _) => {
                let code = self.code(&code_ref)?;
                let OpenCode::LAbs { var, body, .. } = &code.open else {
                    return Err(self.no_rule());
                };
                let body = instantiate(code, &code_ref, &env, CsTerm::Val(body.clone()));
                self.set_focus(body.subst_loc(var, &loc));
                Rule::LApp
            }
            (CsTerm::Val(CsValue::Req(f, w)), _) if active == Side::Client => {
                self.transfer(CsTerm::App(*f, *w));
                Rule::Req
            }
            (CsTerm::Val(CsValue::Call(f, w)), _) if active == Side::Server => {
                self.transfer(CsTerm::App(*f, *w));
                Rule::Call
            }
            (CsTerm::Val(CsValue::Gen(loc, f, w)), _) => {
                let Some(target) = loc.side() else {
                    return Err(self.no_rule());
                };
                self.counters.gen_checks += 1;
                let (f, w) = (*f, *w);
                let (next, rule) = match (target, active) {
                    (Side::Client, Side::Client) => (CsTerm::App(f, w), Rule::GenCC),
                    (Side::Server, Side::Client) => (CsTerm::Val(CsValue::req(f, w)), Rule::GenSC),
                    (Side::Client, Side::Server) => (CsTerm::Val(CsValue::call(f, w)), Rule::GenCS),
                    (Side::Server, Side::Server) => (CsTerm::App(f, w), Rule::GenSS),
                };
                self.set_focus(next);
                rule
            }
            (CsTerm::Val(CsValue::UnitM(v)), None) => {
                let other = active.other();
                if let Some(ctx) = self.conf.stack_mut(other).pop() {
                    self.conf.active = other;
                    self.conf.frames = ctx;
                    self.conf.focus = CsTerm::Val(CsValue::UnitM(v));
                    self.counters.remote_msgs += 1;
                    if active == Side::Client {
                        Rule::UnitC
                    } else {
                        Rule::UnitS
                    }
                } else if !self.conf.stack(active).is_empty() {
                    return Err(self.no_rule());
                } else if active == Side::Client {
                    return Ok(Outcome::Done(*v));
                } else {
                    self.conf.active = Side::Client;
                    self.counters.remote_msgs += 1;
                    Rule::UnitSE
                }
            }
            _ => return Err(self.no_rule()),
        };
        self.counters.steps += 1;
        self.conf.refocus();
        Ok(Outcome::Stepped(rule))
    }
}

/// `body[L̄/l̄][Ā/ᾱ][W̄/z̄]` for a closure's code.
fn instantiate(code: &Code, code_ref: &CodeRef, env: &[CsValue], body: CsTerm) -> CsTerm {
    let mut body = body;
    for (l, to) in code.loc_params.iter().zip(&code_ref.loc_args) {
        body = body.subst_loc(l, to);
    }
    for (a, to) in code.ty_params.iter().zip(&code_ref.ty_args) {
        body = body.subst_ty(a, to);
    }
    for ((z, _), w) in code.env.iter().zip(env) {
        body = body.subst(z, w);
    }
    body
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Re-type the configuration after every step.
    pub verify: bool,
    pub trace: bool,
    pub budget: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct CsRun {
    pub value: CsValue,
    pub counters: CsCounters,
    pub trace: Vec<TraceStep>,
    /// Type of the initial configuration, when verification was on.
    pub config_type: Option<CsType>,
}

/// Runs `⟨main; ε | ε⟩` until it returns at the client.
pub fn run_cs(prog: &CsProgram, opts: &RunOptions) -> Result<CsRun, MachineError> {
    let budget = opts.budget.unwrap_or_else(budget_from_env);
    let mut machine = Machine::new(prog);
    let mut trace = Vec::new();
    let config_type = if opts.verify {
        Some(
            typecheck_config(prog, &machine.conf).map_err(|e| MachineError::Verify {
                step: 0,
                message: e.message,
            })?,
        )
    } else {
        None
    };
    loop {
        if machine.counters.steps >= budget {
            return Err(MachineError::Budget(budget));
        }
        let side = machine.conf.active;
        let redex = if opts.trace {
            machine.redex()
        } else {
            String::new()
        };
        match machine.step()? {
            Outcome::Done(value) => {
                return Ok(CsRun {
                    value,
                    counters: machine.counters,
                    trace,
                    config_type,
                })
            }
            Outcome::Stepped(rule) => {
                let conf = &machine.conf;
                if opts.trace {
                    trace.push(TraceStep {
                        rule,
                        side,
                        redex,
                        depths: (conf.client_stack.len(), conf.server_stack.len()),
                        config: conf.to_string(),
                    });
                }
                if let Some(expected) = &config_type {
                    let step = machine.counters.steps;
                    let fail = |message: String| MachineError::Verify { step, message };
                    if conf.client_stack.len().abs_diff(conf.server_stack.len()) > 1 {
                        return Err(fail("stack depths differ by more than one".into()));
                    }
                    let found = typecheck_config(prog, conf).map_err(|e| fail(e.message))?;
                    if !found.alpha_eq(expected) {
                        return Err(fail(format!(
                            "configuration type changed from {expected} to {found}"
                        )));
                    }
                }
            }
        }
    }
}

/// Convenience for callers that only care about the value and counters.
pub fn eval_cs(prog: &CsProgram, verify: bool) -> Result<(CsValue, CsCounters), MachineError> {
    let run = run_cs(
        prog,
        &RunOptions {
            verify,
            ..RunOptions::default()
        },
    )?;
    Ok((run.value, run.counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loc::Loc;
    use indexmap::IndexMap;

    fn program(main: CsTerm) -> CsProgram {
        CsProgram {
            main,
            codes: IndexMap::new(),
        }
    }

    #[test]
    fn unit_returns_without_steps() {
        let prog = program(CsTerm::Val(CsValue::unit_m(CsValue::Int(0))));
        let run = run_cs(
            &prog,
            &RunOptions {
                verify: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(run.value, CsValue::Int(0));
        assert_eq!(run.counters.steps, 0);
    }

    #[test]
    fn do_binds_the_returned_value() {
        let main = CsValue::do_(
            "x",
            CsTerm::Val(CsValue::unit_m(CsValue::Int(1))),
            CsTerm::Val(CsValue::unit_m(CsValue::var("x"))),
        );
        let prog = program(CsTerm::Val(main));
        let mut m = Machine::new(&prog);
        assert!(matches!(m.step().unwrap(), Outcome::Stepped(Rule::Do)));
        assert_eq!(m.conf.to_string(), "⟨unit 1 | ε⟩");
    }

    #[test]
    fn let_bound_do_is_a_value() {
        // let y = (do x <- unit 1; unit x) in y  — the do is substituted,
        // not run, then it runs as the final computation.
        let inner = CsValue::do_(
            "x",
            CsTerm::Val(CsValue::unit_m(CsValue::Int(1))),
            CsTerm::Val(CsValue::unit_m(CsValue::var("x"))),
        );
        let main = CsTerm::let_("y", CsTerm::Val(inner), CsTerm::Val(CsValue::var("y")));
        let prog = program(main);
        let run = run_cs(
            &prog,
            &RunOptions {
                trace: true,
                verify: true,
                budget: None,
            },
        )
        .unwrap();
        let rules: Vec<_> = run.trace.iter().map(|s| s.rule).collect();
        assert_eq!(rules, vec![Rule::Let, Rule::Do]);
        assert_eq!(run.value, CsValue::Int(1));
    }

    #[test]
    fn missing_code_is_reported() {
        let prog = program(CsTerm::App(
            CsValue::Clo(vec![], CodeRef::plain("f9")),
            CsValue::Int(1),
        ));
        let err = run_cs(&prog, &RunOptions::default()).err().unwrap();
        assert_eq!(err.to_string(), "stuck: missing code f9 at client");
    }

    #[test]
    fn budget_stops_the_machine() {
        let main = CsValue::do_(
            "x",
            CsTerm::Val(CsValue::unit_m(CsValue::Int(1))),
            CsTerm::Val(CsValue::unit_m(CsValue::var("x"))),
        );
        let prog = program(CsTerm::Val(main));
        let err = run_cs(
            &prog,
            &RunOptions {
                budget: Some(0),
                ..Default::default()
            },
        )
        .err()
        .unwrap();
        assert_eq!(err, MachineError::Budget(0));
    }

    #[test]
    fn gen_at_constant_locations_dispatches() {
        let prog = program(CsTerm::Val(CsValue::gen(
            Loc::Client,
            CsValue::Clo(vec![], CodeRef::plain("f1")),
            CsValue::Int(1),
        )));
        let mut m = Machine::new(&prog);
        assert!(matches!(m.step().unwrap(), Outcome::Stepped(Rule::GenCC)));
        assert_eq!(m.counters.gen_checks, 1);
        assert_eq!(m.conf.to_string(), "⟨clo([], f1)(1) | ε⟩");
    }
}
