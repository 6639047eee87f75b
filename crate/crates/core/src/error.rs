use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolterraError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no closed-form relaxation function for {0}; use the numeric solver")]
    UnsupportedClosedForm(String),

    #[error("relaxation recursion diverged at step {step} (|s| = {value:e})")]
    Unstable { step: usize, value: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("singular system: pivot {pivot:e} at row {row} (pivot ratio estimate {condition:e})")]
    Singular { row: usize, pivot: f64, condition: f64 },

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl VolterraError {
    pub fn domain(msg: impl Into<String>) -> Self {
        VolterraError::Domain(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        VolterraError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used on the diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            VolterraError::Domain(_) => "domain",
            VolterraError::UnsupportedClosedForm(_) => "unsupported_closed_form",
            VolterraError::Unstable { .. } => "unstable",
            VolterraError::Quadrature(_) => "quadrature",
            VolterraError::Singular { .. } => "singular",
            VolterraError::Config { .. } => "config",
            VolterraError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for VolterraError {
    fn from(e: std::io::Error) -> Self {
        VolterraError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, VolterraError>;
