use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while loading, planning or simulating.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("map has no free space")]
    NoFreeSpace,

    #[error("rejection sampling exhausted after {attempts} attempts ({accepted} of {requested} samples)")]
    SamplingExhausted {
        attempts: usize,
        accepted: usize,
        requested: usize,
    },

    #[error("endpoint {0} is not free in the planning map")]
    InvalidEndpoint(String),

    #[error("endpoint {0} is not reachable with a straight tether")]
    TetherBlockedEndpoint(String),

    #[error("no path between {from} and {to}")]
    NoPath { from: String, to: String },

    #[error("tether reel {0} is occupied or outside the map")]
    InvalidReel(String),

    #[error("reachability fraction undefined: map has zero free cells")]
    UndefinedFraction,

    #[error("no contact point restores line of sight at waypoint {waypoint}")]
    ContactUnresolvable { waypoint: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::NoFreeSpace => "no-free-space",
            Error::SamplingExhausted { .. } => "sampling-exhausted",
            Error::InvalidEndpoint(_) => "invalid-endpoint",
            Error::TetherBlockedEndpoint(_) => "tether-blocked-endpoint",
            Error::NoPath { .. } => "no-path",
            Error::InvalidReel(_) => "invalid-reel",
            Error::UndefinedFraction => "undefined-fraction",
            Error::ContactUnresolvable { .. } => "contact-unresolvable",
            Error::Precondition(_) => "precondition",
            Error::Io { .. } => "io",
        }
    }
}
