use thiserror::Error;

/// Every failure the element pipeline can report.
///
/// The variant name doubles as the machine-readable error kind written by the
/// command-line front end (see [`Error::kind`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    Geometry(String),
    #[error("sub-mesh generation failed: {0}")]
    Mesh(String),
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("Poisson solve failed: {0}")]
    Solve(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("inadmissible configuration: {0}")]
    Admissibility(String),
    #[error("generator family is rank deficient: {0}")]
    SpaceRank(String),
    #[error("degrees of freedom are not unisolvent: {0}")]
    Unisolvence(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("malformed document: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "GeometryError",
            Error::Mesh(_) => "MeshError",
            Error::Quadrature(_) => "QuadratureError",
            Error::Solve(_) => "SolveError",
            Error::Domain(_) => "DomainError",
            Error::Admissibility(_) => "AdmissibilityError",
            Error::SpaceRank(_) => "SpaceRankError",
            Error::Unisolvence(_) => "UnisolvenceError",
            Error::Usage(_) => "UsageError",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "IoError",
        }
    }

    /// Errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Geometry(_)
                | Error::Admissibility(_)
                | Error::Usage(_)
                | Error::Format(_)
                | Error::Io(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
