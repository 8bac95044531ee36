use polybias::annotate::AnnotateError;
use polybias::backend::BackendError;
use polybias::corpus::CorpusError;
use polybias::report::ReportError;
use polybias::scoring::ScoringError;
use polybias::translate::TranslateError;
use thiserror::Error;

/// Command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or run file (exit 1).
    #[error("usage: {0}")]
    Usage(String),
    /// Inputs or outputs failed a check (exit 2).
    #[error("validation: {0}")]
    Validation(String),
    /// A model backend or translation provider could not be reached or
    /// refused the request (exit 3).
    #[error("transport: {0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Transport(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Config(_) => CliError::Usage(e.to_string()),
            _ if e.is_transport() => CliError::Transport(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match &e {
            ScoringError::Backend { source, .. } if source.is_transport() => CliError::Transport(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TranslateError> for CliError {
    fn from(e: TranslateError) -> Self {
        match &e {
            TranslateError::Provider(_) | TranslateError::Halted { .. } => CliError::Transport(e.to_string()),
            TranslateError::Policy(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AnnotateError> for CliError {
    fn from(e: AnnotateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<polybias::metrics::MetricsError> for CliError {
    fn from(e: polybias::metrics::MetricsError) -> Self {
        CliError::Validation(e.to_string())
    }
}
