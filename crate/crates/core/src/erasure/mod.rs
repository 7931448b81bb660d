//! Erasure into the untyped client-server language.

pub mod erase;
pub mod syntax;

pub use erase::{erase, erase_loc, erase_term, erase_value, erase_with, loc_var, EraseError, EraseOptions};
pub use syntax::{pretty_untyped, Branch, Ctor, UCode, UStore, UTerm, UValue, UntypedProgram};
