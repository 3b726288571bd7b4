use std::io;
use std::path::PathBuf;

use elastic_core::CellId;

pub type Result<T> = std::result::Result<T, GeoError>;

#[derive(Debug, thiserror::Error)]
pub enum GeoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{}: byte {offset}: {msg}", path.display())]
    Codec { path: PathBuf, offset: u64, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] elastic_core::Error),
    #[error("audit found {0} violations; metric not written")]
    Audit(usize),
    #[error("cell {cell} is not a valid secret: {why}")]
    IllegalSecret { cell: CellId, why: &'static str },
    #[error("no check-ins fall inside the evaluation region")]
    EmptyRegion,
}

impl GeoError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        GeoError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        GeoError::Parse { path: path.into(), line, msg: msg.into() }
    }

    /// Process exit code for this error.
    ///
    /// | code | meaning |
    /// |------|---------|
    /// | 1 | IO failure |
    /// | 2 | bad input, bad flags, unknown quantity |
    /// | 3 | requirement audit failed |
    /// | 4 | input cell in the frame or otherwise unusable |
    /// | 5 | evaluation region holds no data |
    pub fn exit_code(&self) -> i32 {
        match self {
            GeoError::Io { .. } => 1,
            GeoError::Parse { .. } | GeoError::Codec { .. } | GeoError::Usage(_) => 2,
            GeoError::Core(elastic_core::Error::EmptyRegion { .. }) => 5,
            GeoError::Core(_) => 2,
            GeoError::Audit(_) => 3,
            GeoError::IllegalSecret { .. } => 4,
            GeoError::EmptyRegion => 5,
        }
    }
}
