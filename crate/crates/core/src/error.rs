use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dialog {dialog_id}: {reason}")]
    InvalidDialog { dialog_id: String, reason: String },
    #[error("verdict {dialog_id}/{requirement_id}: {reason}")]
    InvalidVerdict {
        dialog_id: String,
        requirement_id: String,
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{field} out of range: {message}")]
    Range { field: String, message: String },
    #[error("conflicting settings: {0}")]
    Conflict(String),
    #[error("environment override {var}: {message}")]
    Env { var: String, message: String },
}

impl ConfigError {
    pub(crate) fn range(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Range {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("model unavailable at {url}: {message}")]
    ModelUnavailable { url: String, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("history must end with a {0} turn")]
    History(&'static str),
}

#[derive(Debug, Error)]
pub enum InjectionError {
    #[error("{requirement_id} item {payload_id} has no context variants")]
    MissingVariant {
        requirement_id: String,
        payload_id: String,
    },
    #[error("synonym lexicon is empty")]
    EmptyLexicon,
    #[error("no test data for requirement {0}")]
    NoItems(String),
    #[error("invalid test data: {0}")]
    Data(String),
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    #[error("scorer protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format {0:?}")]
    UnknownFormat(String),
    #[error("verdict files share model id {0:?}")]
    DuplicateModel(String),
}

/// Top-level error for campaign and pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Injection(#[from] InjectionError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
