use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

use polyrpc_core::erasure::{UStore, UTerm, UValue, UntypedProgram};
use polyrpc_core::pipeline::{compile_stage, erase_stage, load, PipelineOptions};
use polyrpc_core::runtime::{
    check_alternation, encode, read_program, run_lockstep, serve_one, write_program, Logged, RuntimeError,
    RuntimeOptions, WireMessage, WireValue,
};
use polyrpc_core::Side;

fn running() -> UntypedProgram {
    let (p, _) = load(include_str!("../corpus/running.rl"), Side::Client).unwrap();
    let opts = PipelineOptions::default();
    erase_stage(&compile_stage(&p, &opts).unwrap(), &opts).unwrap()
}

#[test]
fn a_program_that_never_calls_sends_nothing() {
    let prog = UntypedProgram {
        client_main: UTerm::val(UValue::unit_m(UValue::int(0))),
        client_store: UStore::new(),
        server_store: UStore::new(),
    };
    let run = run_lockstep(&prog, &RuntimeOptions::default()).unwrap();
    assert_eq!(run.value, UValue::int(0));
    assert!(run.messages.is_empty());
    assert_eq!(run.totals().wire_msgs, 0);
}

#[test]
fn mismatched_stores_report_the_missing_code() {
    let mut prog = running();
    prog.server_store.clear();
    let err = run_lockstep(&prog, &RuntimeOptions::default()).unwrap_err();
    assert_eq!(
        err,
        RuntimeError::MissingCode {
            name: "f2".into(),
            side: Side::Server
        }
    );
    assert!(!err.is_protocol());
}

#[test]
fn the_budget_stops_a_run() {
    let err = run_lockstep(&running(), &RuntimeOptions { budget: 3 }).unwrap_err();
    assert_eq!(err, RuntimeError::Budget(3));
}

#[test]
fn out_of_turn_messages_are_flagged() {
    let ret = |from| Logged {
        from,
        msg: WireMessage::Ret(WireValue::Unit),
    };
    assert!(check_alternation(&[ret(Side::Client), ret(Side::Server)]).is_ok());
    assert!(check_alternation(&[ret(Side::Client), ret(Side::Client)]).is_err());
    assert!(check_alternation(&[ret(Side::Server)]).is_err());
}

#[test]
fn program_files_roundtrip() {
    let prog = running();
    assert_eq!(read_program(&write_program(&prog)).unwrap(), prog);
}

fn listen() -> (TcpListener, String) {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap().to_string();
    (l, addr)
}

#[test]
fn server_stops_cleanly_when_an_idle_connection_closes() {
    let (l, addr) = listen();
    let prog = running();
    let store = prog.server_store.clone();
    let server =
        std::thread::spawn(move || serve_one(l.accept().unwrap().0, &store, &RuntimeOptions::default()));
    drop(TcpStream::connect(addr).unwrap());
    let session = server.join().unwrap().unwrap();
    assert!(session.log.is_empty());
}

#[test]
fn hanging_up_during_a_call_is_an_unexpected_end_of_stream() {
    let (l, addr) = listen();
    let prog = running();
    let store = prog.server_store.clone();
    let server =
        std::thread::spawn(move || serve_one(l.accept().unwrap().0, &store, &RuntimeOptions::default()));
    let mut client = TcpStream::connect(addr).unwrap();
    let first = WireMessage::Apply {
        f: WireValue::Closure {
            env: vec![WireValue::Loc(Side::Server)],
            name: "f2".into(),
        },
        a: WireValue::Closure {
            env: vec![],
            name: "f3".into(),
        },
    };
    client.write_all(encode(&first).as_bytes()).unwrap();
    // The server calls back; read that request, then hang up.
    let mut line = String::new();
    BufReader::new(client.try_clone().unwrap())
        .read_line(&mut line)
        .unwrap();
    assert!(line.starts_with("{\"t\":\"Apply\""), "{line}");
    drop(client);
    let err = server.join().unwrap().unwrap_err();
    assert_eq!(err.to_string(), "protocol violation: unexpected end-of-stream");
    assert!(err.is_protocol());
}

#[test]
fn garbage_on_the_wire_is_a_protocol_failure() {
    let (l, addr) = listen();
    let store = running().server_store;
    let server =
        std::thread::spawn(move || serve_one(l.accept().unwrap().0, &store, &RuntimeOptions::default()));
    let mut client = TcpStream::connect(addr).unwrap();
    client.write_all(b"{\"t\":\"Boom\"}\n").unwrap();
    let err = server.join().unwrap().unwrap_err();
    assert!(err.is_protocol(), "{err}");
    assert!(err.to_string().contains("unknown tag"), "{err}");
}
