use std::fmt;
use std::process::ExitCode;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Invalid arguments or inputs. Exit status 2.
    Usage(String),
    /// The requested bound lies outside the theorem's hypothesis. Exit status 3.
    Inapplicable(String),
    /// Reading or writing a file failed. Exit status 4.
    Io(String),
    /// Serialization of an already validated report failed. Exit status 1.
    Internal(String),
}

impl CliError {
    pub fn internal(e: impl fmt::Display) -> Self {
        Self::Internal(e.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Internal(_) => 1,
            Self::Usage(_) => 2,
            Self::Inapplicable(_) => 3,
            Self::Io(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Inapplicable(m) => write!(f, "theorem inapplicable: {m}"),
            Self::Io(m) => write!(f, "I/O error: {m}"),
            Self::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<pdiqkd::Error> for CliError {
    fn from(e: pdiqkd::Error) -> Self {
        match e {
            pdiqkd::Error::TheoremInapplicable { .. } => Self::Inapplicable(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}
