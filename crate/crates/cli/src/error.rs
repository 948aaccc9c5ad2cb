use std::fmt;

/// Failure categories, each with its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Numerical,
    Io,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Numerical => 3,
            Kind::Io => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Config => "config",
            Kind::Numerical => "numerical",
            Kind::Io => "io",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: Kind::Config, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: Kind::Numerical, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: Kind::Io, message: message.into() }
    }
}

/// One line: `error kind=<kind> message=<json-ish quoted text>`.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat = self.message.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
        write!(f, "error kind={} message=\"{}\"", self.kind.name(), flat)
    }
}

impl From<m2no_core::Error> for CliError {
    fn from(e: m2no_core::Error) -> Self {
        use m2no_core::Error as E;
        let kind = match &e {
            E::Numerical(_) | E::Construction(_) => Kind::Numerical,
            E::Io(_) | E::Format(_) => Kind::Io,
            _ => Kind::Config,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
