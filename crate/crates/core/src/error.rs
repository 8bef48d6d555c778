use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("quotient graph is disconnected")]
    Disconnected,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lattice matrix is singular")]
    SingularLattice,
    #[error("Gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid automorphism: {0}")]
    InvalidAutomorphism(String),
    #[error("automorphism search exceeded {0} nodes")]
    SearchLimit(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Coarse failure classes, used by front ends to choose exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Domain,
    Parse,
    Dimension,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) => ErrorClass::Parse,
            Error::DimensionMismatch(_) => ErrorClass::Dimension,
            Error::SingularLattice | Error::NotPositiveDefinite | Error::Numerical(_) => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Domain,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
