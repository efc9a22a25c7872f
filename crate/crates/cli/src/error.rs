use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing required field `{0}` (pass it as a flag or in --config)")]
    Missing(&'static str),
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("{0}")]
    Core(#[from] convexred::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = Result<T, CliError>;
