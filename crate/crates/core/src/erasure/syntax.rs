//! The untyped client-server language: no types, locations reified as the
//! constructors `Client`/`Server`, and explicit `send`/`receive`.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::loc::Side;

/// The constructors of the language. `Closure` is separate
/// ([`UValue::Closure`]) because it also carries a code name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ctor {
    Client,
    Server,
    Apply,
    Ret,
}

impl Ctor {
    pub fn name(self) -> &'static str {
        match self {
            Ctor::Client => "Client",
            Ctor::Server => "Server",
            Ctor::Apply => "Apply",
            Ctor::Ret => "Ret",
        }
    }

    pub fn from_name(name: &str) -> Option<Ctor> {
        Some(match name {
            "Client" => Ctor::Client,
            "Server" => Ctor::Server,
            "Apply" => Ctor::Apply,
            "Ret" => Ctor::Ret,
            _ => return None,
        })
    }

    pub fn of_side(side: Side) -> Ctor {
        match side {
            Side::Client => Ctor::Client,
            Side::Server => Ctor::Server,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "t")]
pub enum UValue {
    Var { name: String },
    Int { v: i64 },
    Unit,
    Pair { l: Box<UValue>, r: Box<UValue> },
    Con { ctor: Ctor, args: Vec<UValue> },
    Closure { env: Vec<UValue>, name: String },
    UnitM { v: Box<UValue> },
    Do { x: String, m: Box<UTerm>, n: Box<UTerm> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub ctor: Ctor,
    pub binders: Vec<String>,
    pub body: UTerm,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "t")]
pub enum UTerm {
    Val {
        v: UValue,
    },
    Let {
        x: String,
        m: Box<UTerm>,
        n: Box<UTerm>,
    },
    Proj {
        i: u8,
        v: UValue,
    },
    App {
        f: UValue,
        a: UValue,
    },
    Send {
        v: UValue,
    },
    Receive,
    /// `loop ()`, the built-in trampoline.
    Loop,
    /// `gen` marks a case produced from a runtime location dispatch.
    Case {
        v: UValue,
        branches: Vec<Branch>,
        gen: bool,
    },
}

impl UValue {
    pub fn var(name: impl Into<String>) -> UValue {
        UValue::Var { name: name.into() }
    }

    pub fn int(v: i64) -> UValue {
        UValue::Int { v }
    }

    pub fn pair(l: UValue, r: UValue) -> UValue {
        UValue::Pair {
            l: Box::new(l),
            r: Box::new(r),
        }
    }

    pub fn con(ctor: Ctor, args: Vec<UValue>) -> UValue {
        UValue::Con { ctor, args }
    }

    pub fn loc(side: Side) -> UValue {
        UValue::con(Ctor::of_side(side), vec![])
    }

    pub fn closure(env: Vec<UValue>, name: impl Into<String>) -> UValue {
        UValue::Closure {
            env,
            name: name.into(),
        }
    }

    pub fn unit_m(v: UValue) -> UValue {
        UValue::UnitM { v: Box::new(v) }
    }

    pub fn do_(x: impl Into<String>, m: UTerm, n: UTerm) -> UValue {
        UValue::Do {
            x: x.into(),
            m: Box::new(m),
            n: Box::new(n),
        }
    }

    /// Plain values: those that may be put on the wire.
    pub fn is_plain(&self) -> bool {
        match self {
            UValue::Var { .. } | UValue::UnitM { .. } | UValue::Do { .. } => false,
            UValue::Int { .. } | UValue::Unit => true,
            UValue::Pair { l, r } => l.is_plain() && r.is_plain(),
            UValue::Con { args, .. } => args.iter().all(UValue::is_plain),
            UValue::Closure { env, .. } => env.iter().all(UValue::is_plain),
        }
    }

    pub fn subst(&self, x: &str, to: &UValue) -> UValue {
        match self {
            UValue::Var { name } if name == x => to.clone(),
            UValue::Var { .. } | UValue::Int { .. } | UValue::Unit => self.clone(),
            UValue::Pair { l, r } => UValue::pair(l.subst(x, to), r.subst(x, to)),
            UValue::Con { ctor, args } => UValue::con(*ctor, args.iter().map(|a| a.subst(x, to)).collect()),
            UValue::Closure { env, name } => {
                UValue::closure(env.iter().map(|a| a.subst(x, to)).collect(), name.clone())
            }
            UValue::UnitM { v } => UValue::unit_m(v.subst(x, to)),
            UValue::Do { x: y, m, n } => {
                let n = if y == x { (**n).clone() } else { n.subst(x, to) };
                UValue::do_(y.clone(), m.subst(x, to), n)
            }
        }
    }

    pub fn free_vars(&self, out: &mut HashSet<String>) {
        match self {
            UValue::Var { name } => {
                out.insert(name.clone());
            }
            UValue::Int { .. } | UValue::Unit => {}
            UValue::Pair { l, r } => {
                l.free_vars(out);
                r.free_vars(out);
            }
            UValue::Con { args: vs, .. } | UValue::Closure { env: vs, .. } => {
                vs.iter().for_each(|v| v.free_vars(out))
            }
            UValue::UnitM { v } => v.free_vars(out),
            UValue::Do { x, m, n } => {
                m.free_vars(out);
                let mut inner = HashSet::new();
                n.free_vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
        }
    }

    fn bound_vars(&self, out: &mut HashSet<String>) {
        match self {
            UValue::Pair { l, r } => {
                l.bound_vars(out);
                r.bound_vars(out);
            }
            UValue::Con { args: vs, .. } | UValue::Closure { env: vs, .. } => {
                vs.iter().for_each(|v| v.bound_vars(out))
            }
            UValue::UnitM { v } => v.bound_vars(out),
            UValue::Do { x, m, n } => {
                out.insert(x.clone());
                m.collect_bound(out);
                n.collect_bound(out);
            }
            _ => {}
        }
    }

    pub fn count_gen_cases(&self) -> usize {
        match self {
            UValue::Pair { l, r } => l.count_gen_cases() + r.count_gen_cases(),
            UValue::Con { args: vs, .. } | UValue::Closure { env: vs, .. } => {
                vs.iter().map(UValue::count_gen_cases).sum()
            }
            UValue::UnitM { v } => v.count_gen_cases(),
            UValue::Do { m, n, .. } => m.count_gen_cases() + n.count_gen_cases(),
            _ => 0,
        }
    }
}

impl UTerm {
    pub fn val(v: UValue) -> UTerm {
        UTerm::Val { v }
    }

    pub fn let_(x: impl Into<String>, m: UTerm, n: UTerm) -> UTerm {
        UTerm::Let {
            x: x.into(),
            m: Box::new(m),
            n: Box::new(n),
        }
    }

    pub fn app(f: UValue, a: UValue) -> UTerm {
        UTerm::App { f, a }
    }

    /// `if(v, m1, m2) = case v of { Client → m1; Server → m2 }`.
    pub fn if_loc(v: UValue, client: UTerm, server: UTerm, gen: bool) -> UTerm {
        UTerm::Case {
            v,
            branches: vec![
                Branch {
                    ctor: Ctor::Client,
                    binders: vec![],
                    body: client,
                },
                Branch {
                    ctor: Ctor::Server,
                    binders: vec![],
                    body: server,
                },
            ],
            gen,
        }
    }

    pub fn subst(&self, x: &str, to: &UValue) -> UTerm {
        match self {
            UTerm::Val { v } => UTerm::val(v.subst(x, to)),
            UTerm::Let { x: y, m, n } => {
                let n = if y == x { (**n).clone() } else { n.subst(x, to) };
                UTerm::let_(y.clone(), m.subst(x, to), n)
            }
            UTerm::Proj { i, v } => UTerm::Proj {
                i: *i,
                v: v.subst(x, to),
            },
            UTerm::App { f, a } => UTerm::app(f.subst(x, to), a.subst(x, to)),
            UTerm::Send { v } => UTerm::Send { v: v.subst(x, to) },
            UTerm::Receive | UTerm::Loop => self.clone(),
            UTerm::Case { v, branches, gen } => UTerm::Case {
                v: v.subst(x, to),
                branches: branches
                    .iter()
                    .map(|b| Branch {
                        ctor: b.ctor,
                        binders: b.binders.clone(),
                        body: if b.binders.iter().any(|y| y == x) {
                            b.body.clone()
                        } else {
                            b.body.subst(x, to)
                        },
                    })
                    .collect(),
                gen: *gen,
            },
        }
    }

    /// Simultaneous substitution, applied left to right.
    pub fn subst_all(&self, pairs: &[(String, UValue)]) -> UTerm {
        pairs.iter().fold(self.clone(), |t, (x, v)| t.subst(x, v))
    }

    pub fn free_vars(&self, out: &mut HashSet<String>) {
        match self {
            UTerm::Val { v } | UTerm::Proj { v, .. } | UTerm::Send { v } => v.free_vars(out),
            UTerm::Let { x, m, n } => {
                m.free_vars(out);
                let mut inner = HashSet::new();
                n.free_vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            UTerm::App { f, a } => {
                f.free_vars(out);
                a.free_vars(out);
            }
            UTerm::Receive | UTerm::Loop => {}
            UTerm::Case { v, branches, .. } => {
                v.free_vars(out);
                for b in branches {
                    let mut inner = HashSet::new();
                    b.body.free_vars(&mut inner);
                    for y in &b.binders {
                        inner.remove(y);
                    }
                    out.extend(inner);
                }
            }
        }
    }

    pub fn free_var_set(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.free_vars(&mut out);
        out
    }

    /// Every name bound anywhere inside the term.
    pub fn bound_vars(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.collect_bound(&mut out);
        out
    }

    fn collect_bound(&self, out: &mut HashSet<String>) {
        match self {
            UTerm::Val { v } | UTerm::Proj { v, .. } | UTerm::Send { v } => v.bound_vars(out),
            UTerm::Let { x, m, n } => {
                out.insert(x.clone());
                m.collect_bound(out);
                n.collect_bound(out);
            }
            UTerm::App { f, a } => {
                f.bound_vars(out);
                a.bound_vars(out);
            }
            UTerm::Receive | UTerm::Loop => {}
            UTerm::Case { v, branches, .. } => {
                v.bound_vars(out);
                for b in branches {
                    out.extend(b.binders.iter().cloned());
                    b.body.collect_bound(out);
                }
            }
        }
    }

    pub fn count_gen_cases(&self) -> usize {
        match self {
            UTerm::Val { v } | UTerm::Proj { v, .. } | UTerm::Send { v } => v.count_gen_cases(),
            UTerm::Let { m, n, .. } => m.count_gen_cases() + n.count_gen_cases(),
            UTerm::App { f, a } => f.count_gen_cases() + a.count_gen_cases(),
            UTerm::Receive | UTerm::Loop => 0,
            UTerm::Case { branches, gen, .. } => {
                usize::from(*gen) + branches.iter().map(|b| b.body.count_gen_cases()).sum::<usize>()
            }
        }
    }
}

/// `z̄. λx. m` in a store.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UCode {
    pub free: Vec<String>,
    pub param: String,
    pub body: UTerm,
}

pub type UStore = IndexMap<String, UCode>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UntypedProgram {
    pub client_main: UTerm,
    pub client_store: UStore,
    pub server_store: UStore,
}

impl UntypedProgram {
    pub fn store(&self, side: Side) -> &UStore {
        match side {
            Side::Client => &self.client_store,
            Side::Server => &self.server_store,
        }
    }

    pub fn count_gen_cases(&self) -> usize {
        self.client_main.count_gen_cases()
            + self
                .client_store
                .values()
                .chain(self.server_store.values())
                .map(|c| c.body.count_gen_cases())
                .sum::<usize>()
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, v: &UValue) -> fmt::Result {
    let compound = match v {
        UValue::Con { args, .. } => !args.is_empty(),
        UValue::Closure { .. } | UValue::UnitM { .. } | UValue::Do { .. } => true,
        _ => false,
    };
    if compound {
        write!(f, "({v})")
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for UValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UValue::Var { name } => f.write_str(name),
            UValue::Int { v } => write!(f, "{v}"),
            UValue::Unit => f.write_str("()"),
            UValue::Pair { l, r } => write!(f, "({l}, {r})"),
            UValue::Con { ctor, args } => {
                f.write_str(ctor.name())?;
                for a in args {
                    f.write_str(" ")?;
                    write_atom(f, a)?;
                }
                Ok(())
            }
            UValue::Closure { env, name } => {
                f.write_str("Closure [")?;
                for (i, v) in env.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "] {name}")
            }
            UValue::UnitM { v } => {
                f.write_str("unit ")?;
                write_atom(f, v)
            }
            UValue::Do { x, m, n } => {
                write!(f, "do {x} <- ")?;
                if matches!(**m, UTerm::Let { .. } | UTerm::Val { v: UValue::Do { .. } }) {
                    write!(f, "({m})")?;
                } else {
                    write!(f, "{m}")?;
                }
                write!(f, "; {n}")
            }
        }
    }
}

impl fmt::Display for UTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UTerm::Val { v } => write!(f, "{v}"),
            UTerm::Let { x, m, n } => write!(f, "let {x} = ({m}) in {n}"),
            UTerm::Proj { i, v } => {
                f.write_str(if *i == 1 { "fst " } else { "snd " })?;
                write_atom(f, v)
            }
            UTerm::App { f: g, a } => {
                write_atom(f, g)?;
                write!(f, "({a})")
            }
            UTerm::Send { v } => write!(f, "send({v})"),
            UTerm::Receive => f.write_str("receive"),
            UTerm::Loop => f.write_str("loop ()"),
            UTerm::Case { v, branches, .. } => {
                write!(f, "case {v} of {{ ")?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    f.write_str(b.ctor.name())?;
                    for x in &b.binders {
                        write!(f, " {x}")?;
                    }
                    write!(f, " -> {}", b.body)?;
                }
                f.write_str(" }")
            }
        }
    }
}

pub fn pretty_store(store: &UStore) -> String {
    let mut out = String::new();
    for (name, code) in store {
        out.push_str(&format!(
            "  {name} = [{}] \\{}. {}\n",
            code.free.join(", "),
            code.param,
            code.body
        ));
    }
    out
}

pub fn pretty_untyped(prog: &UntypedProgram) -> String {
    format!(
        "main = {}\n\nclient:\n{}\nserver:\n{}",
        prog.client_main,
        pretty_store(&prog.client_store),
        pretty_store(&prog.server_store)
    )
}

impl fmt::Display for UntypedProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_untyped(self))
    }
}
