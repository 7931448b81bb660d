//! Locations of the client-server model.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the two location constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Client,
    Server,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Client => Side::Server,
            Side::Server => Side::Client,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Side::Client => "client",
            Side::Server => "server",
        }
    }

    pub fn short(self) -> char {
        match self {
            Side::Client => 'c',
            Side::Server => 's',
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A location expression: a constant or a location variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Loc {
    Client,
    Server,
    Var(String),
}

impl Loc {
    pub fn var(name: impl Into<String>) -> Loc {
        Loc::Var(name.into())
    }

    pub fn side(&self) -> Option<Side> {
        match self {
            Loc::Client => Some(Side::Client),
            Loc::Server => Some(Side::Server),
            Loc::Var(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Loc::Var(_))
    }

    pub fn var_name(&self) -> Option<&str> {
        match self {
            Loc::Var(name) => Some(name),
            _ => None,
        }
    }

    /// `self[to/name]`.
    pub fn subst(&self, name: &str, to: &Loc) -> Loc {
        match self {
            Loc::Var(v) if v == name => to.clone(),
            other => other.clone(),
        }
    }
}

impl From<Side> for Loc {
    fn from(side: Side) -> Loc {
        match side {
            Side::Client => Loc::Client,
            Side::Server => Loc::Server,
        }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loc::Client => f.write_str("client"),
            Loc::Server => f.write_str("server"),
            Loc::Var(v) => f.write_str(v),
        }
    }
}
