use std::fmt;

use thiserror::Error;

use crate::parse::Spans;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    UnboundVar,
    NotAFunction,
    NotAPair,
    AnnotMismatch,
    UniverseError,
    SubtypeFail,
    EquivFail,
    OpenCode,
    LangViolation,
    /// Projection or assignment at the wrong initialization flags.
    FlagError,
    UnknownLoc,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A typing failure, attributed to the subterm where it was detected.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("error[{kind}] {message}")]
pub struct TypeError {
    pub kind: ErrorKind,
    pub message: String,
    // Child indices from the failing node up to the root.
    rev_path: Vec<usize>,
    fuel_exhausted: bool,
}

impl TypeError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        TypeError {
            kind,
            message: message.into(),
            rev_path: Vec::new(),
            fuel_exhausted: false,
        }
    }

    pub(crate) fn fuel(message: impl Into<String>) -> Self {
        TypeError {
            fuel_exhausted: true,
            ..TypeError::new(ErrorKind::EquivFail, message)
        }
    }

    /// Marks the error as coming from child `i` of the current node.
    pub(crate) fn at(mut self, i: usize) -> Self {
        self.rev_path.push(i);
        self
    }

    /// True when the failure is an exhausted conversion budget rather than a
    /// definite rejection.
    pub fn is_fuel_exhausted(&self) -> bool {
        self.fuel_exhausted
    }

    /// Child-index path from the root to the failing subterm.
    pub fn path(&self) -> Vec<usize> {
        self.rev_path.iter().rev().copied().collect()
    }

    /// `error[KIND] line:col message`.
    pub fn render(&self, spans: &Spans) -> String {
        match spans.nearest(&self.path()) {
            Some(pos) => format!("error[{}] {} {}", self.kind, pos, self.message),
            None => self.to_string(),
        }
    }
}

/// Normalization ran out of its step budget.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("fuel exhausted after {0} reduction steps")]
pub struct FuelExhausted(pub u64);

impl From<FuelExhausted> for TypeError {
    fn from(e: FuelExhausted) -> Self {
        TypeError::fuel(e.to_string())
    }
}
