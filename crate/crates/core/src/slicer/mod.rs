//! Slicing compilation from the RPC calculus to the client-server calculus,
//! and the gen-specialization pass over its output.

pub mod compile;
pub mod optimize;

pub use compile::{
    compile, compile_term, compile_type_comp, compile_type_value, compile_with, CompileError, CompileOptions,
    Mutation,
};
pub use optimize::optimize;
