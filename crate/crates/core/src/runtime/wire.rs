//! Newline-delimited JSON framing of `Apply`/`Ret` messages.
//!
//! ```text
//! {"t":"Apply","f":V,"a":V}        {"t":"Ret","v":V}
//! {"t":"Int","v":1}  {"t":"Unit"}  {"t":"Pair","l":V,"r":V}
//! {"t":"Clo","env":[V,…],"name":"f2"}  {"t":"Loc","v":"Server"}
//! {"t":"Con","name":"Apply","args":[V,…]}
//! ```
//!
//! The encoder writes keys in exactly this order with no whitespace, so the
//! encoding of a message is canonical.

use std::fmt::Write as _;
use std::io::BufRead;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::erasure::syntax::{Ctor, UValue};
use crate::loc::Side;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WireValue {
    Int(i64),
    Unit,
    Pair(Box<WireValue>, Box<WireValue>),
    Closure { env: Vec<WireValue>, name: String },
    Loc(Side),
    Con { name: String, args: Vec<WireValue> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WireMessage {
    Apply { f: WireValue, a: WireValue },
    Ret(WireValue),
}

impl WireMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            WireMessage::Apply { .. } => "Apply",
            WireMessage::Ret(_) => "Ret",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("truncated stream")]
    Truncated,
    #[error("cannot send non-plain value {0}")]
    NotPlain(String),
    #[error("i/o error: {0}")]
    Io(String),
}

fn write_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

fn write_value(out: &mut String, v: &WireValue) {
    match v {
        WireValue::Int(n) => {
            let _ = write!(out, r#"{{"t":"Int","v":{n}}}"#);
        }
        WireValue::Unit => out.push_str(r#"{"t":"Unit"}"#),
        WireValue::Pair(l, r) => {
            out.push_str(r#"{"t":"Pair","l":"#);
            write_value(out, l);
            out.push_str(r#","r":"#);
            write_value(out, r);
            out.push('}');
        }
        WireValue::Closure { env, name } => {
            out.push_str(r#"{"t":"Clo","env":"#);
            write_list(out, env);
            out.push_str(r#","name":"#);
            write_str(out, name);
            out.push('}');
        }
        WireValue::Loc(side) => {
            let name = match side {
                Side::Client => "Client",
                Side::Server => "Server",
            };
            let _ = write!(out, r#"{{"t":"Loc","v":"{name}"}}"#);
        }
        WireValue::Con { name, args } => {
            out.push_str(r#"{"t":"Con","name":"#);
            write_str(out, name);
            out.push_str(r#","args":"#);
            write_list(out, args);
            out.push('}');
        }
    }
}

fn write_list(out: &mut String, vs: &[WireValue]) {
    out.push('[');
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_value(out, v);
    }
    out.push(']');
}

/// One frame, including the trailing newline.
pub fn encode(msg: &WireMessage) -> String {
    let mut out = String::new();
    match msg {
        WireMessage::Apply { f, a } => {
            out.push_str(r#"{"t":"Apply","f":"#);
            write_value(&mut out, f);
            out.push_str(r#","a":"#);
            write_value(&mut out, a);
            out.push('}');
        }
        WireMessage::Ret(v) => {
            out.push_str(r#"{"t":"Ret","v":"#);
            write_value(&mut out, v);
            out.push('}');
        }
    }
    out.push('\n');
    out
}

/// Parses one frame. The frame must end with its newline; a missing one
/// means the stream was cut short.
pub fn decode(frame: &[u8]) -> Result<WireMessage, WireError> {
    let Some(body) = frame.strip_suffix(b"\n") else {
        return Err(WireError::Truncated);
    };
    let text = std::str::from_utf8(body).map_err(|_| WireError::Malformed("invalid UTF-8".into()))?;
    let json: Value = serde_json::from_str(text).map_err(|e| {
        if e.is_eof() {
            WireError::Truncated
        } else {
            WireError::Malformed(e.to_string())
        }
    })?;
    let obj = object(&json)?;
    match tag(obj)? {
        "Apply" => Ok(WireMessage::Apply {
            f: value(field(obj, "f")?)?,
            a: value(field(obj, "a")?)?,
        }),
        "Ret" => Ok(WireMessage::Ret(value(field(obj, "v")?)?)),
        other => Err(WireError::UnknownTag(other.to_string())),
    }
}

fn object(v: &Value) -> Result<&Map<String, Value>, WireError> {
    v.as_object()
        .ok_or_else(|| WireError::Malformed(format!("expected an object, found {v}")))
}

fn tag(obj: &Map<String, Value>) -> Result<&str, WireError> {
    field(obj, "t")?
        .as_str()
        .ok_or_else(|| WireError::Malformed("tag is not a string".into()))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, WireError> {
    obj.get(key)
        .ok_or_else(|| WireError::Malformed(format!("missing field {key:?}")))
}

fn list(v: &Value) -> Result<Vec<WireValue>, WireError> {
    v.as_array()
        .ok_or_else(|| WireError::Malformed("expected an array".into()))?
        .iter()
        .map(value)
        .collect()
}

fn string(v: &Value) -> Result<String, WireError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| WireError::Malformed("expected a string".into()))
}

fn value(v: &Value) -> Result<WireValue, WireError> {
    let obj = object(v)?;
    match tag(obj)? {
        "Int" => field(obj, "v")?
            .as_i64()
            .map(WireValue::Int)
            .ok_or_else(|| WireError::Malformed("Int payload is not a 64-bit integer".into())),
        "Unit" => Ok(WireValue::Unit),
        "Pair" => Ok(WireValue::Pair(
            Box::new(value(field(obj, "l")?)?),
            Box::new(value(field(obj, "r")?)?),
        )),
        "Clo" => Ok(WireValue::Closure {
            env: list(field(obj, "env")?)?,
            name: string(field(obj, "name")?)?,
        }),
        "Loc" => match field(obj, "v")?.as_str() {
            Some("Client") => Ok(WireValue::Loc(Side::Client)),
            Some("Server") => Ok(WireValue::Loc(Side::Server)),
            _ => Err(WireError::Malformed(
                "Loc payload must be Client or Server".into(),
            )),
        },
        "Con" => Ok(WireValue::Con {
            name: string(field(obj, "name")?)?,
            args: list(field(obj, "args")?)?,
        }),
        other => Err(WireError::UnknownTag(other.to_string())),
    }
}

/// Converts a plain erased value for sending.
pub fn to_wire(v: &UValue) -> Result<WireValue, WireError> {
    Ok(match v {
        UValue::Int { v } => WireValue::Int(*v),
        UValue::Unit => WireValue::Unit,
        UValue::Pair { l, r } => WireValue::Pair(Box::new(to_wire(l)?), Box::new(to_wire(r)?)),
        UValue::Closure { env, name } => WireValue::Closure {
            env: env.iter().map(to_wire).collect::<Result<_, _>>()?,
            name: name.clone(),
        },
        UValue::Con {
            ctor: Ctor::Client,
            args,
        } if args.is_empty() => WireValue::Loc(Side::Client),
        UValue::Con {
            ctor: Ctor::Server,
            args,
        } if args.is_empty() => WireValue::Loc(Side::Server),
        UValue::Con { ctor, args } => WireValue::Con {
            name: ctor.name().to_string(),
            args: args.iter().map(to_wire).collect::<Result<_, _>>()?,
        },
        UValue::Var { .. } | UValue::UnitM { .. } | UValue::Do { .. } => {
            return Err(WireError::NotPlain(v.to_string()))
        }
    })
}

pub fn from_wire(v: &WireValue) -> Result<UValue, WireError> {
    Ok(match v {
        WireValue::Int(n) => UValue::int(*n),
        WireValue::Unit => UValue::Unit,
        WireValue::Pair(l, r) => UValue::pair(from_wire(l)?, from_wire(r)?),
        WireValue::Closure { env, name } => {
            UValue::closure(env.iter().map(from_wire).collect::<Result<_, _>>()?, name.clone())
        }
        WireValue::Loc(side) => UValue::loc(*side),
        WireValue::Con { name, args } => {
            let ctor = Ctor::from_name(name)
                .ok_or_else(|| WireError::Malformed(format!("unknown constructor {name:?}")))?;
            UValue::con(ctor, args.iter().map(from_wire).collect::<Result<_, _>>()?)
        }
    })
}

/// Reads frames from a byte stream.
pub struct FrameReader<R> {
    inner: R,
    buf: Vec<u8>,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(inner: R) -> FrameReader<R> {
        FrameReader {
            inner,
            buf: Vec::new(),
        }
    }

    /// `Ok(None)` on a clean end of stream between frames.
    pub fn read(&mut self) -> Result<Option<WireMessage>, WireError> {
        self.buf.clear();
        let n = self
            .inner
            .read_until(b'\n', &mut self.buf)
            .map_err(|e| WireError::Io(e.to_string()))?;
        if n == 0 {
            return Ok(None);
        }
        decode(&self.buf).map(Some)
    }
}
