use std::fmt;

/// A failure mapped to a process exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable or malformed input (exit 2).
    Data(String),
    /// Numerical failure during a run (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Self::Usage(m) => ("usage", m),
            Self::Data(m) => ("data", m),
            Self::Numeric(m) => ("numeric", m),
        };
        // keep diagnostics on one line
        write!(f, "{kind} error: {}", msg.replace('\n', " "))
    }
}

impl std::error::Error for CliError {}

impl From<semidev::Error> for CliError {
    fn from(e: semidev::Error) -> Self {
        use semidev::Error as E;
        match e {
            E::DimensionMismatch { .. } | E::Data(_) => Self::Data(e.to_string()),
            E::NonFinite { .. } | E::Convergence { .. } => Self::Numeric(e.to_string()),
            E::InvalidArgument(_) | E::Config(_) | E::Capacity(_) => Self::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}
