use alloc::string::String;

use crate::geogrid::CellId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    CoordinateOutOfRange { lat: f64, lon: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("cell {cell} is outside a grid of {len} cells")]
    CellOutOfGrid { cell: CellId, len: usize },
    #[error("{what} must be nonnegative, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grids do not match")]
    GridMismatch,
    #[error("calibration set is empty")]
    EmptyCalibration,
    #[error("invalid fences: {0}")]
    InvalidFences(String),
    #[error("secret {cell} has no report at finite distance")]
    UnreachableSecret { cell: CellId },
    #[error("report set is empty")]
    EmptyReports,
    #[error("cell {cell} is not a secret of the mechanism")]
    UnknownSecret { cell: CellId },
    #[error("no check-in falls inside the region ({cells} cells)")]
    EmptyRegion { cells: usize },
    #[error("prior support is empty")]
    EmptySupport,
    #[error("domain mismatch: {0}")]
    DomainMismatch(&'static str),
    #[error("target utility {target} outside the achievable interval [{low}, {high}]")]
    TargetOutOfRange { target: f64, low: f64, high: f64 },
    #[error("utility is not monotone in epsilon near {epsilon}")]
    NotMonotone { epsilon: f64 },
}
