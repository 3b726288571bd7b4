//! Elastic distinguishability metrics for location privacy.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the algorithmic
//! pieces of the pipeline:
//!
//! - [`geogrid`]: planar grid geometry, projection of lat/lon onto the grid,
//!   Euclidean distances and balls over cell centers.
//! - [`mass`]: per-cell privacy mass `m(x) = a + q(x)·b` from a quality field.
//! - [`metric`]: the graph builder producing an elastic metric whose balls
//!   collect the required amount of privacy mass, fences, and shortest-path
//!   queries over the result.
//! - [`mech`]: the exponential mechanism over an arbitrary metric, the planar
//!   Laplace baseline and the dX-privacy ratio check.
//! - [`eval`]: priors from check-ins, the optimal Bayesian remapping, adversary
//!   error, utility and calibration of planar Laplace to a utility target.
//!
//! File formats, the check-in loader and the command line live in the
//! `elastic-geo` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod eval;
pub mod geogrid;
pub mod mass;
pub mod mech;
pub mod metric;

pub use error::{Error, Result};
pub use geogrid::{CellId, GeoCoord, GridSpec, PlanarPoint, EARTH_RADIUS_M};
pub use mass::{MassGrid, MassNormalizers, QualityGrid};
pub use mech::{EpsilonConfig, Loss, MechanismMatrix};
pub use metric::{FenceSet, MetricGraph, Requirement};
