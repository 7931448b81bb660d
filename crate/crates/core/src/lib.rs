//! Slicing compiler and client-server runtime for a location-polymorphic
//! RPC calculus.
//!
//! The pipeline runs through three languages:
//!
//! 1. [`rpc`] — the source calculus, where one application syntax covers
//!    local and remote calls and locations may be abstracted over;
//! 2. [`cs`] — a typed client-server calculus with explicit `req`, `call`
//!    and runtime-dispatched `gen` calls, produced by [`slicer`];
//! 3. [`runtime`] — an untyped first-order language run by two trampolined
//!    endpoints exchanging `Apply`/`Ret` messages, produced by [`erasure`].
//!
//! [`pipeline`] strings the stages together and checks that they agree.

pub mod cs;
pub mod erasure;
pub mod gen;
pub mod loc;
pub mod names;
pub mod pipeline;
pub mod rpc;
pub mod runtime;
pub mod slicer;
pub mod surface;

pub use loc::{Loc, Side};
