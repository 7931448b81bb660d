//! One side of an erased program: a reduction machine that stops whenever
//! it has to talk to the other side.
//!
//! The machine is a zipper over `let`/`do` frames, as in the typed
//! configuration machine, but with one stack per endpoint: the nesting of
//! remote calls lives in the frames under each `loop ()` rather than in a
//! global stack-of-stacks.

use std::fmt;

use thiserror::Error;

use crate::erasure::syntax::{Branch, Ctor, UCode, UStore, UTerm, UValue};
use crate::loc::Side;
use crate::runtime::wire::{from_wire, to_wire, WireError, WireMessage, WireValue};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("stuck: missing code {name} at {side}")]
    MissingCode { name: String, side: Side },
    #[error("stuck: case with no matching constructor for {0}")]
    NoMatch(String),
    #[error("stuck: no rule applies to {0}")]
    Stuck(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("step budget of {0} exhausted")]
    Budget(usize),
    #[error("wire: {0}")]
    Wire(#[from] WireError),
}

impl RuntimeError {
    /// Errors caused by the conversation itself rather than by a program
    /// that cannot reduce.
    pub fn is_protocol(&self) -> bool {
        matches!(self, RuntimeError::Protocol(_) | RuntimeError::Wire(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RuntimeCounters {
    pub steps: usize,
    /// Reductions of the case a `gen` was erased to.
    pub dyn_checks: usize,
    /// Messages this endpoint put on the wire.
    pub wire_msgs: usize,
}

impl RuntimeCounters {
    pub fn add(&self, other: &RuntimeCounters) -> RuntimeCounters {
        RuntimeCounters {
            steps: self.steps + other.steps,
            dyn_checks: self.dyn_checks + other.dyn_checks,
            wire_msgs: self.wire_msgs + other.wire_msgs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum UFrame {
    Let(String, UTerm),
    Do(String, UTerm),
}

/// What an endpoint does when it can no longer reduce by itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Send(WireMessage),
    Receive,
    Done(UValue),
}

pub struct Endpoint<'s> {
    side: Side,
    store: &'s UStore,
    focus: UTerm,
    frames: Vec<UFrame>,
    /// A message was sent and no answer has arrived yet.
    awaiting: bool,
    budget: usize,
    pub counters: RuntimeCounters,
}

/// `loop ()` unfolded once:
///
/// ```text
/// do m <- receive;
/// case m of { Apply f a -> do z <- f(a); do u <- send(Ret z); loop ()
///           ; Ret y     -> unit y }
/// ```
fn loop_body() -> UTerm {
    let serve = UTerm::val(UValue::do_(
        "_lz",
        UTerm::app(UValue::var("_lf"), UValue::var("_la")),
        UTerm::val(UValue::do_(
            "_lu",
            UTerm::Send {
                v: UValue::con(Ctor::Ret, vec![UValue::var("_lz")]),
            },
            UTerm::Loop,
        )),
    ));
    UTerm::val(UValue::do_(
        "_lm",
        UTerm::Receive,
        UTerm::Case {
            v: UValue::var("_lm"),
            branches: vec![
                Branch {
                    ctor: Ctor::Apply,
                    binders: vec!["_lf".into(), "_la".into()],
                    body: serve,
                },
                Branch {
                    ctor: Ctor::Ret,
                    binders: vec!["_ly".into()],
                    body: UTerm::val(UValue::unit_m(UValue::var("_ly"))),
                },
            ],
            gen: false,
        },
    ))
}

impl<'s> Endpoint<'s> {
    pub fn new(side: Side, store: &'s UStore, main: UTerm, budget: usize) -> Endpoint<'s> {
        let mut ep = Endpoint {
            side,
            store,
            focus: main,
            frames: Vec::new(),
            awaiting: false,
            budget,
            counters: RuntimeCounters::default(),
        };
        ep.refocus();
        ep
    }

    /// A server starts by waiting for the first request.
    pub fn server(store: &'s UStore, budget: usize) -> Endpoint<'s> {
        Endpoint::new(Side::Server, store, UTerm::Loop, budget)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Blocked in the outermost `receive` with nothing pending: a server in
    /// this state may be shut down.
    pub fn is_idle(&self) -> bool {
        self.focus == UTerm::Receive && self.frames.len() <= 1
    }

    pub fn is_receiving(&self) -> bool {
        self.focus == UTerm::Receive
    }

    /// Reduces until the next event.
    pub fn run(&mut self) -> Result<Event, RuntimeError> {
        loop {
            if let Some(ev) = self.step()? {
                return Ok(ev);
            }
        }
    }

    /// Hands a received message to an endpoint blocked in `receive`.
    pub fn deliver(&mut self, msg: &WireMessage) -> Result<(), RuntimeError> {
        if self.focus != UTerm::Receive {
            return Err(RuntimeError::Protocol(format!(
                "{} received a message while not waiting for one",
                self.side
            )));
        }
        let v = match msg {
            WireMessage::Apply { f, a } => UValue::con(Ctor::Apply, vec![from_wire(f)?, from_wire(a)?]),
            WireMessage::Ret(v) => UValue::con(Ctor::Ret, vec![from_wire(v)?]),
        };
        self.awaiting = false;
        self.focus = UTerm::val(UValue::unit_m(v));
        Ok(())
    }

    fn refocus(&mut self) {
        loop {
            let top_is_let = matches!(self.frames.last(), Some(UFrame::Let(..)));
            match std::mem::replace(&mut self.focus, UTerm::Receive) {
                UTerm::Let { x, m, n } => {
                    self.frames.push(UFrame::Let(x, *n));
                    self.focus = *m;
                }
                UTerm::Val {
                    v: UValue::Do { x, m, n },
                } if !top_is_let => {
                    self.frames.push(UFrame::Do(x, *n));
                    self.focus = *m;
                }
                other => {
                    self.focus = other;
                    return;
                }
            }
        }
    }

    fn set(&mut self, t: UTerm) {
        self.counters.steps += 1;
        self.focus = t;
        self.refocus();
    }

    fn code(&self, name: &str) -> Result<&'s UCode, RuntimeError> {
        self.store.get(name).ok_or_else(|| RuntimeError::MissingCode {
            name: name.to_string(),
            side: self.side,
        })
    }

    fn stuck(&self) -> RuntimeError {
        RuntimeError::Stuck(self.focus.to_string())
    }

    /// One reduction, or the event that stops reduction.
    fn step(&mut self) -> Result<Option<Event>, RuntimeError> {
        if self.counters.steps >= self.budget {
            return Err(RuntimeError::Budget(self.budget));
        }
        let focus = std::mem::replace(&mut self.focus, UTerm::Receive);
        match focus {
            UTerm::Val { v } => match (v, self.frames.pop()) {
                (v, Some(UFrame::Let(x, n))) => self.set(n.subst(&x, &v)),
                (UValue::UnitM { v }, Some(UFrame::Do(x, n))) => self.set(n.subst(&x, &v)),
                (UValue::UnitM { v }, None) => {
                    self.focus = UTerm::val(UValue::unit_m((*v).clone()));
                    return Ok(Some(Event::Done(*v)));
                }
                (v, frame) => {
                    self.focus = UTerm::val(v);
                    self.frames.extend(frame);
                    return Err(self.stuck());
                }
            },
            UTerm::Proj {
                i,
                v: UValue::Pair { l, r },
            } => self.set(UTerm::val(if i == 1 { *l } else { *r })),
            UTerm::App {
                f: UValue::Closure { env, name },
                a,
            } => {
                let code = self.code(&name)?;
                if code.free.len() != env.len() {
                    self.focus = UTerm::app(UValue::closure(env, name), a);
                    return Err(self.stuck());
                }
                let pairs: Vec<(String, UValue)> = code.free.iter().cloned().zip(env).collect();
                // The environment is closed, so substituting it first cannot
                // capture the argument.
                let body = code.body.subst_all(&pairs).subst(&code.param, &a);
                self.set(body)
            }
            UTerm::Case { v, branches, gen } => {
                let UValue::Con { ctor, args } = &v else {
                    self.focus = UTerm::Case { v, branches, gen };
                    return Err(self.stuck());
                };
                let Some(branch) = branches
                    .iter()
                    .find(|b| b.ctor == *ctor && b.binders.len() == args.len())
                else {
                    return Err(RuntimeError::NoMatch(v.to_string()));
                };
                let mut body = branch.body.clone();
                for (x, a) in branch.binders.iter().zip(args) {
                    body = body.subst(x, a);
                }
                if gen {
                    self.counters.dyn_checks += 1;
                }
                self.set(body)
            }
            UTerm::Loop => self.set(loop_body()),
            UTerm::Send { v } => {
                if self.awaiting {
                    self.focus = UTerm::Send { v };
                    return Err(RuntimeError::Protocol(format!(
                        "double send: {} sent again before receiving an answer",
                        self.side
                    )));
                }
                let msg = message(&v)?;
                self.awaiting = true;
                self.counters.wire_msgs += 1;
                self.set(UTerm::val(UValue::unit_m(UValue::Unit)));
                return Ok(Some(Event::Send(msg)));
            }
            UTerm::Receive => {
                self.focus = UTerm::Receive;
                return Ok(Some(Event::Receive));
            }
            other => {
                self.focus = other;
                return Err(self.stuck());
            }
        }
        Ok(None)
    }
}

/// The payload of a `send` must be `Apply f a` or `Ret v` over plain values.
fn message(v: &UValue) -> Result<WireMessage, RuntimeError> {
    let plain = |v: &UValue| -> Result<WireValue, RuntimeError> { Ok(to_wire(v)?) };
    match v {
        UValue::Con {
            ctor: Ctor::Apply,
            args,
        } if args.len() == 2 => Ok(WireMessage::Apply {
            f: plain(&args[0])?,
            a: plain(&args[1])?,
        }),
        UValue::Con {
            ctor: Ctor::Ret,
            args,
        } if args.len() == 1 => Ok(WireMessage::Ret(plain(&args[0])?)),
        other => Err(RuntimeError::Protocol(format!("cannot send {other}"))),
    }
}

impl fmt::Debug for Endpoint<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Endpoint")
            .field("side", &self.side)
            .field("focus", &self.focus.to_string())
            .field("frames", &self.frames.len())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with_id() -> UStore {
        let mut store = UStore::new();
        store.insert(
            "id".into(),
            UCode {
                free: vec![],
                param: "x".into(),
                body: UTerm::val(UValue::unit_m(UValue::var("x"))),
            },
        );
        store
    }

    #[test]
    fn server_boots_into_receive() {
        let store = UStore::new();
        let mut server = Endpoint::server(&store, 100);
        assert_eq!(server.run().unwrap(), Event::Receive);
        assert!(server.is_idle());
    }

    #[test]
    fn server_answers_an_apply() {
        let store = store_with_id();
        let mut server = Endpoint::server(&store, 100);
        server.run().unwrap();
        server
            .deliver(&WireMessage::Apply {
                f: WireValue::Closure {
                    env: vec![],
                    name: "id".into(),
                },
                a: WireValue::Int(7),
            })
            .unwrap();
        assert_eq!(
            server.run().unwrap(),
            Event::Send(WireMessage::Ret(WireValue::Int(7)))
        );
        assert_eq!(server.run().unwrap(), Event::Receive);
        assert!(server.is_idle());
    }

    #[test]
    fn gen_case_counts_as_a_dynamic_check() {
        let store = store_with_id();
        let main = UTerm::if_loc(
            UValue::loc(Side::Client),
            UTerm::app(UValue::closure(vec![], "id"), UValue::int(3)),
            UTerm::Loop,
            true,
        );
        let mut client = Endpoint::new(Side::Client, &store, main, 100);
        assert_eq!(client.run().unwrap(), Event::Done(UValue::int(3)));
        assert_eq!(client.counters.dyn_checks, 1);
    }

    #[test]
    fn second_send_without_answer_is_rejected() {
        let store = UStore::new();
        let send = UTerm::Send {
            v: UValue::con(Ctor::Ret, vec![UValue::int(1)]),
        };
        let main = UTerm::val(UValue::do_("a", send.clone(), send));
        let mut client = Endpoint::new(Side::Client, &store, main, 100);
        assert!(matches!(client.run().unwrap(), Event::Send(_)));
        let err = client.run().unwrap_err();
        assert!(err.is_protocol(), "{err}");
    }
}
