use thiserror::Error;

/// Failures raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("positivity violation: {0}")]
    Positivity(String),
    #[error("ellipticity violation: {0}")]
    Ellipticity(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("search bound exceeded: {0}")]
    SearchBound(String),
    #[error("property failure in {check}: {witness}")]
    Property { check: String, witness: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
