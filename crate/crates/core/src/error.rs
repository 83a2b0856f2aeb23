use std::fmt;

use thiserror::Error;

use crate::frontend::span::SourceSpan;

/// Pipeline phase that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Parse,
    Include,
    Model,
    Analysis,
    Transform,
    Render,
    Io,
    Config,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Parse => "parse",
            Phase::Include => "include",
            Phase::Model => "model",
            Phase::Analysis => "analysis",
            Phase::Transform => "transform",
            Phase::Render => "render",
            Phase::Io => "io",
            Phase::Config => "config",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{phase} error: {message}")]
pub struct Error {
    pub phase: Phase,
    pub message: String,
    pub span: Option<SourceSpan>,
}

impl Error {
    pub fn new(phase: Phase, message: impl Into<String>) -> Self {
        Error {
            phase,
            message: message.into(),
            span: None,
        }
    }

    pub fn at(phase: Phase, span: SourceSpan, message: impl Into<String>) -> Self {
        Error {
            phase,
            message: message.into(),
            span: Some(span),
        }
    }

    pub fn parse(span: SourceSpan, message: impl Into<String>) -> Self {
        Error::at(Phase::Parse, span, message)
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        if self.span.is_none() {
            self.span = Some(span);
        }
        self
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A list of errors collected across files or units.
#[derive(Debug, Clone, Default, PartialEq, Eq, Error)]
#[error("{} error(s)", .0.len())]
pub struct Errors(pub Vec<Error>);

impl From<Error> for Errors {
    fn from(e: Error) -> Self {
        Errors(vec![e])
    }
}
