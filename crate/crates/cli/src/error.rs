use ifs_recur::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Budget { .. }) => 3,
            CliError::Core(Error::Consistency(_) | Error::Numeric(_)) => 4,
            _ => 2,
        }
    }

    /// Short tag leading the one-line reason.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                Error::Budget { .. } => "budget",
                Error::Consistency(_) => "consistency",
                Error::Numeric(_) => "numeric",
                Error::Parse(_) => "parse",
                Error::Domain(_) => "domain",
                Error::Precondition(_) | Error::EqualWords | Error::WindowMismatch => "precondition",
                Error::InvalidIfs(_) | Error::SymbolOutOfRange { .. } => "invalid-ifs",
                Error::UndefinedBound(_) => "undefined-bound",
                Error::UnsupportedDegree(_)
                | Error::UnsupportedDimension(_)
                | Error::UnsupportedShape(_)
                | Error::UnsupportedConfiguration(_) => "unsupported",
            },
        }
    }

    pub fn reason(&self) -> String {
        let text = self.to_string().replace(['\n', '\r'], " ");
        format!("{}: {text}", self.category())
    }
}
