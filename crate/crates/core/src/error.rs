use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown problem `{name}`; valid names are: {valid}")]
    UnknownProblem { name: String, valid: String },

    #[error("config error{}: {message}", location(*.line, .key.as_deref()))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("solver failure{}: {message}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Solver { step: Option<usize>, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

fn location(line: Option<usize>, key: Option<&str>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(" (line {l}, key `{k}`)"),
        (Some(l), None) => format!(" (line {l})"),
        (None, Some(k)) => format!(" (key `{k}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
