use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("ZF null space empty: the relay needs more transmit than receive antennas")]
    EmptyNullSpace,
    #[error("not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("not PSD (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("invalid value for --{flag}: {message}")]
    Config { flag: String, message: String },
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn config(flag: &str, message: impl ToString) -> Self {
        Error::Config {
            flag: flag.to_string(),
            message: message.to_string(),
        }
    }
}
