use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("true channel has zero Frobenius norm")]
    ZeroChannel,

    #[error("combiner block {block} is rank deficient (smallest eigenvalue {eigenvalue:e})")]
    RankDeficientCombiner { block: usize, eigenvalue: f64 },

    #[error("restricted least squares failed on subcarrier {subcarrier} with {columns} columns")]
    LeastSquares { subcarrier: usize, columns: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("trial {trial} (sweep point {point}): {source}")]
    Trial {
        point: usize,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than by
    /// the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) => true,
            Error::Trial { source, .. } => source.is_config(),
            _ => false,
        }
    }

    /// True for failures inside the numerical pipeline.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::ZeroChannel
            | Error::RankDeficientCombiner { .. }
            | Error::LeastSquares { .. }
            | Error::Invariant(_) => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
