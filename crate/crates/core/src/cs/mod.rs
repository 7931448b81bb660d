//! The polymorphic client-server calculus: syntax, typing, and the
//! configuration machine.

pub mod machine;
pub mod pretty;
pub mod syntax;
pub mod typeck;

pub use machine::{
    eval_cs, run_cs, Configuration, CsCounters, CsRun, Frame, Machine, MachineError, Outcome, Rule,
    RunOptions, TraceStep,
};
pub use pretty::{pretty_code, pretty_cs_program};
pub use syntax::{Code, CodeRef, CsProgram, CsTerm, CsType, CsValue, OpenCode, Placement};
pub use typeck::{
    check_codes, typecheck_config, typecheck_program, typecheck_term, typecheck_value, CsEnv, CsTypeError,
};
