use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by mesh construction, operator setup and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-manifold edge ({0}, {1}) shared by more than two triangles")]
    NonManifoldEdge(usize, usize),

    #[error("element {0} has zero or negative area")]
    DegenerateElement(usize),

    #[error("element {element} references vertex {vertex}, but the mesh has {count} vertices")]
    BadVertexIndex {
        element: usize,
        vertex: usize,
        count: usize,
    },

    #[error("singular matrix while building {0}")]
    SingularMatrix(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("no sign change over [{0}, {1}]")]
    NoSignChange(f64, f64),

    #[error("error band is empty (band_eps = {0})")]
    EmptyBand(f64),

    #[error("non-finite value in element {element} at RK stage {stage} (t = {time})")]
    NonFinite { element: usize, stage: usize, time: f64 },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// `true` for errors caused by the inputs rather than the solve.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::NonManifoldEdge(..)
                | Error::DegenerateElement(_)
                | Error::BadVertexIndex { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
