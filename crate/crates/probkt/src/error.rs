use probkt_core::Error as CoreError;

/// Process exit codes. Stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Input = 2,
    Data = 3,
    Budget = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input: bad syntax, schema violations, unreadable files.
    #[error("{0}")]
    Input(String),
    /// Well-formed input whose content cannot be used.
    #[error("{0}")]
    Data(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn core(context: impl Into<String>, source: CoreError) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn exit_status(&self) -> ExitStatus {
        match self {
            CliError::Input(_) | CliError::Io { .. } => ExitStatus::Input,
            CliError::Data(_) => ExitStatus::Data,
            CliError::Core { source, .. } => classify(source),
        }
    }
}

/// Exit status for a core error.
pub fn classify(e: &CoreError) -> ExitStatus {
    if e.is_budget() {
        ExitStatus::Budget
    } else if e.is_parse()
        || matches!(
            e,
            CoreError::InvalidConfig(_)
                | CoreError::InvalidDelta(_)
                | CoreError::InvalidVocab(_)
                | CoreError::StepOutOfRange(_)
        )
    {
        ExitStatus::Input
    } else {
        ExitStatus::Data
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::core("error", e)
    }
}
