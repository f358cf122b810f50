use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ParseError: {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("TopologyError: {0}")]
    Topology(String),

    #[error("GeometryError: {0}")]
    Geometry(String),

    #[error("SingularGram: {0}")]
    SingularGram(String),

    #[error("SingularLocalSystem: {0}")]
    SingularLocalSystem(String),

    #[error("SolverFailure: {0}")]
    SolverFailure(String),

    #[error("ConfigError: {0}")]
    Config(String),

    #[error("DegenerateRate: mesh sizes {0} and {1} coincide")]
    DegenerateRate(f64, f64),

    #[error("DivisionByZero: {0}")]
    DivisionByZero(String),

    #[error("IoError: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short typed name, used by the CLI for its exit message.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::Topology(_) => "TopologyError",
            Error::Geometry(_) => "GeometryError",
            Error::SingularGram(_) => "SingularGram",
            Error::SingularLocalSystem(_) => "SingularLocalSystem",
            Error::SolverFailure(_) => "SolverFailure",
            Error::Config(_) => "ConfigError",
            Error::DegenerateRate(..) => "DegenerateRate",
            Error::DivisionByZero(_) => "DivisionByZero",
            Error::Io { .. } => "IoError",
        }
    }

    /// Prefixes the message with where the failure happened (mesh, element, ...).
    pub fn context(self, ctx: impl std::fmt::Display) -> Error {
        match self {
            Error::Parse { path, message } => Error::Parse {
                path,
                message: format!("{ctx}: {message}"),
            },
            Error::Topology(m) => Error::Topology(format!("{ctx}: {m}")),
            Error::Geometry(m) => Error::Geometry(format!("{ctx}: {m}")),
            Error::SingularGram(m) => Error::SingularGram(format!("{ctx}: {m}")),
            Error::SingularLocalSystem(m) => Error::SingularLocalSystem(format!("{ctx}: {m}")),
            Error::SolverFailure(m) => Error::SolverFailure(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::DivisionByZero(m) => Error::DivisionByZero(format!("{ctx}: {m}")),
            other => other,
        }
    }
}
