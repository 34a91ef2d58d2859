use std::fmt;

use super::ast::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    Syntax,
    Unsupported,
    DuplicateName,
    UnresolvedIdentifier,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::Unsupported => "unsupported-construct",
            ParseErrorKind::DuplicateName => "duplicate-name",
            ParseErrorKind::UnresolvedIdentifier => "unresolved-identifier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, span: Span, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            line: span.line,
            col: span.col,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn with_expected(mut self, expected: &[&str]) -> Self {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {} ({})",
            self.line,
            self.col,
            self.message,
            self.kind.as_str()
        )?;
        if !self.expected.is_empty() {
            write!(f, "; expected one of: {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecErrorKind {
    NoSuchModule,
    NoClockFound,
    NoResetFound,
    ClockResetCollision,
    Malformed,
    SchemaViolation,
}

impl SpecErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecErrorKind::NoSuchModule => "no-such-module",
            SpecErrorKind::NoClockFound => "no-clock-found",
            SpecErrorKind::NoResetFound => "no-reset-found",
            SpecErrorKind::ClockResetCollision => "clock-reset-collision",
            SpecErrorKind::Malformed => "malformed",
            SpecErrorKind::SchemaViolation => "schema-violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} ({})", kind.as_str())]
pub struct SpecError {
    pub kind: SpecErrorKind,
    pub message: String,
}

impl SpecError {
    pub fn new(kind: SpecErrorKind, message: impl Into<String>) -> Self {
        SpecError {
            kind,
            message: message.into(),
        }
    }
}
