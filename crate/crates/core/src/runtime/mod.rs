//! Running erased programs: endpoints, the wire format and transports.

pub mod endpoint;
pub mod laws;
pub mod store;
pub mod transport;
pub mod wire;

pub use endpoint::{Endpoint, Event, RuntimeCounters, RuntimeError};
pub use laws::{rewrite_program, rewrite_term, Law};
pub use store::{
    read_main, read_program, read_store, write_main, write_program, write_store, CLIENT_MAIN_FILE,
    CLIENT_STORE_FILE, SERVER_STORE_FILE,
};
pub use transport::{
    check_alternation, client_session, connect, run_lockstep, run_pair, run_socket_local, serve_one, Logged,
    PairRun, RuntimeOptions, Session, Transport, DEFAULT_BUDGET,
};
pub use wire::{decode, encode, from_wire, to_wire, FrameReader, WireError, WireMessage, WireValue};
