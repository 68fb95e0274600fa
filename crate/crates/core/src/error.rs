use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-physical environment: {0}")]
    NonPhysicalEnvironment(String),

    #[error("degenerate environment: {0}")]
    DegenerateEnvironment(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("FDTD run did not decay: {0}")]
    Convergence(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("optimisation region exhausted: every candidate site is occupied")]
    RegionExhausted,

    #[error("validation protocol error: {0}")]
    Protocol(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
