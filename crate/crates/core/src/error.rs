use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("array of {requested} dipoles exceeds the limit of {limit}")]
    SizeLimit { requested: usize, limit: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("reference pair ({0}, {1}) has zero coupling")]
    DegenerateReference(usize, usize),

    #[error("invalid pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
