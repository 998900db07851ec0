use alloc::string::String;

use crate::schema::Kind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schema syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown type `{keyword}` at line {line}, column {column}")]
    UnknownType {
        line: usize,
        column: usize,
        keyword: String,
    },
    #[error("duplicate field name `{0}`")]
    DuplicateField(String),
    #[error("invalid field name `{0}`")]
    InvalidName(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("type mismatch at `{field}`: expected {expected}, found {actual}")]
    TypeMismatch {
        field: String,
        expected: Kind,
        actual: Kind,
    },
    #[error("duplicate map key `{0}`")]
    DuplicateKey(String),
    #[error("truncated input at byte {offset}: need {needed} bytes, {available} available")]
    Truncated {
        offset: u64,
        needed: u64,
        available: u64,
    },
    #[error("invalid UTF-8 at byte {offset}")]
    InvalidUtf8 { offset: u64 },
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("codec error: {0}")]
    Codec(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("cannot skip {count} records from position {position}: only {record_count} records")]
    SkipPastEnd {
        position: u64,
        count: u64,
        record_count: u64,
    },
    #[error("field `{0}` is not projected")]
    NotProjected(String),
    #[error("cursor exhausted")]
    Exhausted,
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for errors that indicate damaged or inconsistent stored data.
    pub fn is_corruption(&self) -> bool {
        matches!(
            self,
            Error::Truncated { .. }
                | Error::InvalidUtf8 { .. }
                | Error::Corrupt(_)
                | Error::Codec(_)
        )
    }
}
