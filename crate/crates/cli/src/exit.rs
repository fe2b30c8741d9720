//! Exit-code classification.

use std::fmt;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Io = 1,
    Invalid = 2,
    Crypto = 3,
    NoAccess = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: Code, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code as u8)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

/// Tags a fallible result with the exit code its error should produce.
pub trait Classify<T> {
    fn or_code(self, code: Code) -> Outcome<T>;

    fn io(self) -> Outcome<T>
    where
        Self: Sized,
    {
        self.or_code(Code::Io)
    }

    fn invalid(self) -> Outcome<T>
    where
        Self: Sized,
    {
        self.or_code(Code::Invalid)
    }

    fn crypto(self) -> Outcome<T>
    where
        Self: Sized,
    {
        self.or_code(Code::Crypto)
    }
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_code(self, code: Code) -> Outcome<T> {
        self.map_err(|e| Failure::new(code, e))
    }
}

pub fn fail<T>(code: Code, msg: impl fmt::Display) -> Outcome<T> {
    Err(Failure::new(code, anyhow::anyhow!("{msg}")))
}
