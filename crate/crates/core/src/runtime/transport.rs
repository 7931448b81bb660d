//! Driving a client and a server endpoint against each other.
//!
//! Two transports: an in-process lockstep scheduler, where exactly one
//! endpoint runs at a time, and a TCP connection carrying one frame per
//! line. Both record the conversation so that its shape can be checked
//! afterwards.

use std::fmt;
use std::io::{BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use crate::erasure::syntax::{UStore, UTerm, UValue, UntypedProgram};
use crate::loc::Side;
use crate::runtime::endpoint::{Endpoint, Event, RuntimeCounters, RuntimeError};
use crate::runtime::wire::{decode, encode, FrameReader, WireError, WireMessage};

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Transport {
    #[default]
    Lockstep,
    Socket,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuntimeOptions {
    /// Per-endpoint step budget.
    pub budget: usize,
}

impl Default for RuntimeOptions {
    fn default() -> Self {
        RuntimeOptions {
            budget: DEFAULT_BUDGET,
        }
    }
}

/// A message together with the side that sent it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Logged {
    pub from: Side,
    pub msg: WireMessage,
}

impl fmt::Display for Logged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {}  {}",
            self.from,
            self.from.other(),
            encode(&self.msg).trim_end()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairRun {
    pub value: UValue,
    pub client: RuntimeCounters,
    pub server: RuntimeCounters,
    pub messages: Vec<Logged>,
}

impl PairRun {
    pub fn totals(&self) -> RuntimeCounters {
        self.client.add(&self.server)
    }
}

/// Consecutive messages must come from different sides, and the first one
/// from the client.
pub fn check_alternation(messages: &[Logged]) -> Result<(), RuntimeError> {
    let mut expected = Side::Client;
    for (i, m) in messages.iter().enumerate() {
        if m.from != expected {
            return Err(RuntimeError::Protocol(format!(
                "message {i} sent by {} out of turn",
                m.from
            )));
        }
        expected = expected.other();
    }
    Ok(())
}

pub fn run_pair(
    prog: &UntypedProgram,
    transport: Transport,
    opts: &RuntimeOptions,
) -> Result<PairRun, RuntimeError> {
    match transport {
        Transport::Lockstep => run_lockstep(prog, opts),
        Transport::Socket => run_socket_local(prog, opts),
    }
}

/// Runs both endpoints in one thread. Every message goes through the
/// codec, so this exercises the same frames a socket would carry.
pub fn run_lockstep(prog: &UntypedProgram, opts: &RuntimeOptions) -> Result<PairRun, RuntimeError> {
    let mut client = Endpoint::new(
        Side::Client,
        &prog.client_store,
        prog.client_main.clone(),
        opts.budget,
    );
    let mut server = Endpoint::server(&prog.server_store, opts.budget);
    match server.run()? {
        Event::Receive => {}
        other => return Err(unexpected(Side::Server, &other)),
    }
    let mut messages = Vec::new();
    let mut active = Side::Client;
    loop {
        let (me, peer) = match active {
            Side::Client => (&mut client, &mut server),
            Side::Server => (&mut server, &mut client),
        };
        match me.run()? {
            Event::Send(msg) => {
                // The sender must reach its receive before the peer runs.
                match me.run()? {
                    Event::Receive => {}
                    other => return Err(unexpected(active, &other)),
                }
                let msg = decode(encode(&msg).as_bytes())?;
                peer.deliver(&msg)?;
                messages.push(Logged { from: active, msg });
                active = active.other();
            }
            Event::Done(v) if active == Side::Client && server.is_idle() => {
                check_alternation(&messages)?;
                return Ok(PairRun {
                    value: v,
                    client: client.counters,
                    server: server.counters,
                    messages,
                });
            }
            other => return Err(unexpected(active, &other)),
        }
    }
}

fn unexpected(side: Side, ev: &Event) -> RuntimeError {
    RuntimeError::Protocol(match ev {
        Event::Send(_) => format!("double send: {side} sent again before receiving an answer"),
        Event::Receive => format!("deadlock: {side} waits while its peer waits"),
        Event::Done(v) if side == Side::Server => format!("server finished with {v}"),
        Event::Done(v) => format!("client finished with {v} while a call was outstanding"),
    })
}

/// Runs one endpoint over a byte stream until it finishes. A server
/// returns `None` when the client hangs up while the server is idle.
pub fn drive<R: std::io::BufRead, W: Write>(
    ep: &mut Endpoint<'_>,
    reader: &mut FrameReader<R>,
    writer: &mut W,
    log: &mut Vec<Logged>,
) -> Result<Option<UValue>, RuntimeError> {
    let side = ep.side();
    loop {
        match ep.run()? {
            Event::Send(msg) => {
                writer
                    .write_all(encode(&msg).as_bytes())
                    .and_then(|_| writer.flush())
                    .map_err(|e| WireError::Io(e.to_string()))?;
                log.push(Logged { from: side, msg });
            }
            Event::Receive => match reader.read()? {
                Some(msg) => {
                    ep.deliver(&msg)?;
                    log.push(Logged {
                        from: side.other(),
                        msg,
                    });
                }
                None if side == Side::Server && ep.is_idle() => return Ok(None),
                None => return Err(RuntimeError::Protocol("unexpected end-of-stream".to_string())),
            },
            Event::Done(v) if side == Side::Client => return Ok(Some(v)),
            other => return Err(unexpected(side, &other)),
        }
    }
}

/// The outcome of one side of a socket session.
#[derive(Clone, Debug)]
pub struct Session {
    pub value: Option<UValue>,
    pub counters: RuntimeCounters,
    pub log: Vec<Logged>,
}

fn io(e: std::io::Error) -> RuntimeError {
    RuntimeError::Wire(WireError::Io(e.to_string()))
}

/// Serves exactly one connection.
pub fn serve_one(stream: TcpStream, store: &UStore, opts: &RuntimeOptions) -> Result<Session, RuntimeError> {
    let mut reader = FrameReader::new(BufReader::new(stream.try_clone().map_err(io)?));
    let mut writer = stream;
    let mut ep = Endpoint::server(store, opts.budget);
    let mut log = Vec::new();
    drive(&mut ep, &mut reader, &mut writer, &mut log)?;
    Ok(Session {
        value: None,
        counters: ep.counters,
        log,
    })
}

pub fn client_session(
    stream: TcpStream,
    store: &UStore,
    main: &UTerm,
    opts: &RuntimeOptions,
) -> Result<Session, RuntimeError> {
    let mut reader = FrameReader::new(BufReader::new(stream.try_clone().map_err(io)?));
    let mut writer = stream;
    let mut ep = Endpoint::new(Side::Client, store, main.clone(), opts.budget);
    let mut log = Vec::new();
    let value = drive(&mut ep, &mut reader, &mut writer, &mut log)?;
    let _ = writer.shutdown(std::net::Shutdown::Both);
    Ok(Session {
        value,
        counters: ep.counters,
        log,
    })
}

pub fn connect(addr: impl ToSocketAddrs) -> Result<TcpStream, RuntimeError> {
    TcpStream::connect(addr).map_err(io)
}

/// Both ends over a loopback connection, the server on its own thread.
pub fn run_socket_local(prog: &UntypedProgram, opts: &RuntimeOptions) -> Result<PairRun, RuntimeError> {
    let listener = TcpListener::bind("127.0.0.1:0").map_err(io)?;
    let addr = listener.local_addr().map_err(io)?;
    let timeout = Some(Duration::from_secs(60));
    let store = prog.server_store.clone();
    let server_opts = *opts;
    let server = std::thread::Builder::new()
        .name("polyrpc-server".into())
        .stack_size(64 << 20)
        .spawn(move || -> Result<Session, RuntimeError> {
            let (stream, _) = listener.accept().map_err(io)?;
            stream.set_read_timeout(timeout).map_err(io)?;
            serve_one(stream, &store, &server_opts)
        })
        .map_err(io)?;
    let stream = connect(addr)?;
    stream.set_read_timeout(timeout).map_err(io)?;
    let client = client_session(stream, &prog.client_store, &prog.client_main, opts);
    let server = server
        .join()
        .map_err(|_| RuntimeError::Protocol("server thread panicked".into()))?;
    // A client failure explains the server's broken stream; report it first.
    let client = client?;
    let server = server?;
    if client.log != server.log {
        return Err(RuntimeError::Protocol(
            "client and server disagree on the conversation".into(),
        ));
    }
    check_alternation(&client.log)?;
    Ok(PairRun {
        value: client.value.expect("a client session ends with a value"),
        client: client.counters,
        server: server.counters,
        messages: client.log,
    })
}
