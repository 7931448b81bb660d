//! Compiled programs on disk.
//!
//! A split deployment is three JSON files: the client store, the server
//! store (each an object from code names to open codes) and the client's
//! main term. The whole program also has a one-file form.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::erasure::syntax::{UStore, UTerm, UntypedProgram};

pub const CLIENT_STORE_FILE: &str = "client_store.json";
pub const SERVER_STORE_FILE: &str = "server_store.json";
pub const CLIENT_MAIN_FILE: &str = "client_main.json";

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("erased programs always serialize");
    s.push('\n');
    s
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn write_store(store: &UStore) -> String {
    to_json(store)
}

pub fn read_store(text: &str) -> Result<UStore, serde_json::Error> {
    from_json(text)
}

pub fn write_main(main: &UTerm) -> String {
    to_json(main)
}

pub fn read_main(text: &str) -> Result<UTerm, serde_json::Error> {
    from_json(text)
}

pub fn write_program(prog: &UntypedProgram) -> String {
    to_json(prog)
}

pub fn read_program(text: &str) -> Result<UntypedProgram, serde_json::Error> {
    from_json(text)
}
