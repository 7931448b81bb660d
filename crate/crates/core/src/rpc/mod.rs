//! The source calculus: syntax, type checker, evaluator and the
//! monomorphisation pass.

pub mod eval;
pub mod mono;
pub mod syntax;
pub mod typeck;

pub use eval::{eval, EvalCounters, EvalError};
pub use mono::monomorphise;
pub use syntax::{BaseType, Def, RpcTerm, RpcType, SourceProgram, Span, TermKind};
pub use typeck::{typecheck, typecheck_program, TypeEnv, TypeError};
