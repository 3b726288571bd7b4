//! Planar grid geometry.
//!
//! Cells are square, indexed row-major from the south-west corner. Every
//! geometric quantity is measured between cell centers.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Mean Earth radius used by the equirectangular projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoCoord {
    pub lat: f64,
    pub lon: f64,
}

impl GeoCoord {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(lat.is_finite() && lon.is_finite()) || lat.abs() > 90.0 || lon.abs() > 180.0 {
            return Err(Error::CoordinateOutOfRange { lat, lon });
        }
        Ok(Self { lat, lon })
    }
}

/// A point in meters east/north of the grid origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub east: f64,
    pub north: f64,
}

impl PlanarPoint {
    pub const fn new(east: f64, north: f64) -> Self {
        Self { east, north }
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        libm::hypot(self.east - other.east, self.north - other.north)
    }
}

/// Row-major cell index: `index = row * nx + column`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

impl CellId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    origin: GeoCoord,
    cell_size: f64,
    nx: u32,
    ny: u32,
}

impl GridSpec {
    /// `origin` is the south-west corner of the grid.
    pub fn new(origin: GeoCoord, cell_size: f64, nx: u32, ny: u32) -> Result<Self> {
        GeoCoord::new(origin.lat, origin.lon)?;
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidGrid("cell size must be positive"));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid("grid needs at least one cell per axis"));
        }
        if (nx as u64) * (ny as u64) > u32::MAX as u64 {
            return Err(Error::InvalidGrid("too many cells"));
        }
        Ok(Self { origin, cell_size, nx, ny })
    }

    /// A grid whose geometric center sits at `center`.
    pub fn centered(center: GeoCoord, cell_size: f64, nx: u32, ny: u32) -> Result<Self> {
        let half_north = 0.5 * ny as f64 * cell_size;
        let half_east = 0.5 * nx as f64 * cell_size;
        let dlat = (half_north / EARTH_RADIUS_M).to_degrees();
        let coslat = libm::cos(center.lat.to_radians());
        let dlon = (half_east / (EARTH_RADIUS_M * coslat)).to_degrees();
        let origin = GeoCoord::new(center.lat - dlat, center.lon - dlon)?;
        Self::new(origin, cell_size, nx, ny)
    }

    /// A grid anchored at (0, 0); convenient when only planar geometry matters.
    pub fn planar(cell_size: f64, nx: u32, ny: u32) -> Result<Self> {
        Self::new(GeoCoord { lat: 0.0, lon: 0.0 }, cell_size, nx, ny)
    }

    pub fn origin(&self) -> GeoCoord {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nx(&self) -> u32 {
        self.nx
    }

    pub fn ny(&self) -> u32 {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx as usize * self.ny as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + Clone {
        (0..self.len() as u32).map(CellId)
    }

    /// Latitude of the grid's geometric center, the reference parallel of
    /// the projection.
    pub fn center_lat(&self) -> f64 {
        let half_north = 0.5 * self.ny as f64 * self.cell_size;
        self.origin.lat + (half_north / EARTH_RADIUS_M).to_degrees()
    }

    /// Equirectangular projection about the grid's center latitude.
    pub fn project(&self, lat: f64, lon: f64) -> Result<PlanarPoint> {
        let p = GeoCoord::new(lat, lon)?;
        let coslat = libm::cos(self.center_lat().to_radians());
        let east = EARTH_RADIUS_M * (p.lon - self.origin.lon).to_radians() * coslat;
        let north = EARTH_RADIUS_M * (p.lat - self.origin.lat).to_radians();
        Ok(PlanarPoint { east, north })
    }

    /// Inverse of [`GridSpec::project`].
    pub fn unproject(&self, p: PlanarPoint) -> GeoCoord {
        let coslat = libm::cos(self.center_lat().to_radians());
        GeoCoord {
            lat: self.origin.lat + (p.north / EARTH_RADIUS_M).to_degrees(),
            lon: self.origin.lon + (p.east / (EARTH_RADIUS_M * coslat)).to_degrees(),
        }
    }

    /// The cell containing `p`, or `None` outside the grid. East and north
    /// cell boundaries belong to the next cell.
    pub fn cell_of(&self, p: PlanarPoint) -> Option<CellId> {
        if !(p.east.is_finite() && p.north.is_finite()) || p.east < 0.0 || p.north < 0.0 {
            return None;
        }
        let col = libm::floor(p.east / self.cell_size);
        let row = libm::floor(p.north / self.cell_size);
        if col >= self.nx as f64 || row >= self.ny as f64 {
            return None;
        }
        self.cell(col as u32, row as u32)
    }

    pub fn cell(&self, col: u32, row: u32) -> Option<CellId> {
        (col < self.nx && row < self.ny).then(|| CellId(row * self.nx + col))
    }

    pub fn col_row(&self, c: CellId) -> (u32, u32) {
        (c.0 % self.nx, c.0 / self.nx)
    }

    pub fn contains(&self, c: CellId) -> bool {
        c.index() < self.len()
    }

    pub fn check(&self, c: CellId) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::CellOutOfGrid { cell: c, len: self.len() })
        }
    }

    pub fn center(&self, c: CellId) -> PlanarPoint {
        let (col, row) = self.col_row(c);
        PlanarPoint {
            east: (col as f64 + 0.5) * self.cell_size,
            north: (row as f64 + 0.5) * self.cell_size,
        }
    }

    /// Distance between cell centers without bounds checks.
    #[inline]
    pub(crate) fn euclidean_unchecked(&self, x: CellId, y: CellId) -> f64 {
        let (cx, rx) = self.col_row(x);
        let (cy, ry) = self.col_row(y);
        offset_length(cx.abs_diff(cy), rx.abs_diff(ry)) * self.cell_size
    }

    pub fn euclidean(&self, x: CellId, y: CellId) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.euclidean_unchecked(x, y))
    }

    /// Closed Euclidean ball over cell centers, clipped to the grid, in
    /// increasing cell order.
    pub fn euclid_ball(&self, x: CellId, r: f64) -> Result<Vec<CellId>> {
        self.check(x)?;
        if !(r >= 0.0) {
            return Err(Error::Negative { what: "radius", value: r });
        }
        let (col, row) = self.col_row(x);
        let reach = libm::floor(r / self.cell_size).min(u32::MAX as f64) as u32;
        let col_lo = col.saturating_sub(reach);
        let col_hi = col.saturating_add(reach).min(self.nx - 1);
        let row_lo = row.saturating_sub(reach);
        let row_hi = row.saturating_add(reach).min(self.ny - 1);
        let mut out = Vec::new();
        for rr in row_lo..=row_hi {
            for cc in col_lo..=col_hi {
                let d = offset_length(cc.abs_diff(col), rr.abs_diff(row)) * self.cell_size;
                if d <= r {
                    out.push(CellId(rr * self.nx + cc));
                }
            }
        }
        Ok(out)
    }

    /// Chebyshev distance, in cells, from `c` to the nearest grid border.
    /// Cells on the outermost ring have distance 0.
    pub fn border_distance(&self, c: CellId) -> u32 {
        let (col, row) = self.col_row(c);
        col.min(row).min(self.nx - 1 - col).min(self.ny - 1 - row)
    }

    /// Largest center-to-center distance on the grid.
    pub fn diameter(&self) -> f64 {
        offset_length(self.nx - 1, self.ny - 1) * self.cell_size
    }
}

#[inline]
pub(crate) fn offset_length(dc: u32, dr: u32) -> f64 {
    let (dc, dr) = (dc as f64, dr as f64);
    libm::sqrt(dc * dc + dr * dr)
}

/// Size of a closed Euclidean ball of radius `r` on an unbounded lattice
/// with spacing `cell_size`.
pub fn lattice_ball_size(cell_size: f64, r: f64) -> Result<usize> {
    if !(cell_size > 0.0) {
        return Err(Error::InvalidGrid("cell size must be positive"));
    }
    if !(r >= 0.0) {
        return Err(Error::Negative { what: "radius", value: r });
    }
    let reach = libm::floor(r / cell_size) as i64;
    let mut count = 0usize;
    for i in -reach..=reach {
        for j in -reach..=reach {
            if offset_length(i.unsigned_abs() as u32, j.unsigned_abs() as u32) * cell_size <= r {
                count += 1;
            }
        }
    }
    Ok(count)
}
