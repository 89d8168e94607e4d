use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no valid SCM after {attempts} sampling attempts: {reason}")]
    Unsatisfiable { attempts: usize, reason: String },

    #[error("contemporaneous mechanisms form a cycle")]
    ContemporaneousCycle,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("the PAG admits no valid MAG completion")]
    NoModel,

    #[error("directed link {0} carries no effect size")]
    MissingEffect(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("unknown sweep parameter `{name}`; valid parameters: {}", valid.join(", "))]
    UnknownParam { name: String, valid: Vec<&'static str> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
