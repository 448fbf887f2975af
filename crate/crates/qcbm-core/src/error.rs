//! Error taxonomy shared by all core modules.

use alloc::string::String;
use core::fmt;

/// Failure modes of the core routines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed arguments: bad dimensions, ranges, or inconsistent inputs.
    Input(String),
    /// A documented size or iteration cap was exceeded.
    Resource(String),
    /// An iterative numerical routine failed to converge or lost precision.
    Numerical(String),
    /// A requested statistic has no supporting samples.
    InsufficientData(String),
    /// Arguments are well formed but the operation is undefined on them.
    DegenerateInput(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn insufficient_data(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    pub fn message(&self) -> &str {
        match self {
            Error::Input(m)
            | Error::Resource(m)
            | Error::Numerical(m)
            | Error::InsufficientData(m)
            | Error::DegenerateInput(m) => m,
        }
    }

    /// Same variant with `prefix: ` prepended to the message; used to attach
    /// context such as the training iteration an error surfaced in.
    pub fn prefixed(self, prefix: &str) -> Self {
        let wrap = |m: String| {
            let mut s = String::with_capacity(prefix.len() + 2 + m.len());
            s.push_str(prefix);
            s.push_str(": ");
            s.push_str(&m);
            s
        };
        match self {
            Error::Input(m) => Error::Input(wrap(m)),
            Error::Resource(m) => Error::Resource(wrap(m)),
            Error::Numerical(m) => Error::Numerical(wrap(m)),
            Error::InsufficientData(m) => Error::InsufficientData(wrap(m)),
            Error::DegenerateInput(m) => Error::DegenerateInput(wrap(m)),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(m) => write!(f, "input error: {m}"),
            Error::Resource(m) => write!(f, "resource error: {m}"),
            Error::Numerical(m) => write!(f, "numerical error: {m}"),
            Error::InsufficientData(m) => write!(f, "insufficient data: {m}"),
            Error::DegenerateInput(m) => write!(f, "degenerate input: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
