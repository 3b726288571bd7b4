//! Privacy mass of grid cells.
//!
//! A cell's mass is `m(x) = a + q(x)·b`: `a` is what any cell contributes by
//! occupying space and `b` converts semantic quality into mass. The two
//! normalizers are fixed so that an empty `r_large` ball and an average
//! `r_small` ball both hold exactly one unit of mass.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geogrid::{lattice_ball_size, CellId, GridSpec};

/// Weighted aggregate of per-category feature counts for one cell.
pub fn aggregate_quality(counts: &[f64], weights: &[f64]) -> Result<f64> {
    if counts.len() != weights.len() {
        return Err(Error::DomainMismatch("counts and weights differ in length"));
    }
    let mut q = 0.0;
    for (&c, &w) in counts.iter().zip(weights) {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Negative { what: "feature count", value: c });
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Negative { what: "quality weight", value: w });
        }
        q += w * c;
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityGrid {
    grid: GridSpec,
    q: Vec<f64>,
}

impl QualityGrid {
    pub fn new(grid: GridSpec, q: Vec<f64>) -> Result<Self> {
        if q.len() != grid.len() {
            return Err(Error::DomainMismatch("quality vector length differs from grid size"));
        }
        if let Some(&bad) = q.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Negative { what: "quality", value: bad });
        }
        Ok(Self { grid, q })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { q: alloc::vec![0.0; grid.len()], grid }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn get(&self, c: CellId) -> f64 {
        self.q[c.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn set(&mut self, c: CellId, q: f64) -> Result<()> {
        self.grid.check(c)?;
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Negative { what: "quality", value: q });
        }
        self.q[c.index()] = q;
        Ok(())
    }

    /// `q(A)` for a set of cells, summed in the given order.
    pub fn quality_of(&self, cells: &[CellId]) -> Result<f64> {
        let mut total = 0.0;
        for &c in cells {
            self.grid.check(c)?;
            total += self.q[c.index()];
        }
        Ok(total)
    }

    /// Default calibration set: cells of strictly positive quality, or every
    /// cell when the field is identically zero.
    pub fn default_calibration(&self) -> Vec<CellId> {
        let positive: Vec<CellId> = self.grid.cells().filter(|c| self.q[c.index()] > 0.0).collect();
        if positive.is_empty() {
            self.grid.cells().collect()
        } else {
            positive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassNormalizers {
    pub grid: GridSpec,
    pub a: f64,
    pub b: f64,
    pub avg_q: f64,
    pub r_small: f64,
    pub r_large: f64,
}

/// Derives `a` and `b` from the quality field.
///
/// Ball cardinalities are those of an unbounded lattice; `avg_q` is the plain
/// mean of `q(B_r_small(x))` over the calibration cells, with balls clipped
/// to the grid.
pub fn compute_normalizers(
    qg: &QualityGrid,
    r_small: f64,
    r_large: f64,
    calibration: &[CellId],
) -> Result<MassNormalizers> {
    if !(r_small > 0.0 && r_small.is_finite() && r_large.is_finite() && r_small < r_large) {
        return Err(Error::InvalidParameter(alloc::format!(
            "need 0 < r_small < r_large, got r_small = {r_small}, r_large = {r_large}"
        )));
    }
    if calibration.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let grid = *qg.grid();
    let n_small = lattice_ball_size(grid.cell_size(), r_small)?;
    let n_large = lattice_ball_size(grid.cell_size(), r_large)?;
    if n_small >= n_large {
        return Err(Error::InvalidParameter(alloc::format!(
            "r_small and r_large cover the same cells ({n_small}) at cell size {}",
            grid.cell_size()
        )));
    }

    let mut sum = 0.0;
    for &x in calibration {
        sum += qg.quality_of(&grid.euclid_ball(x, r_small)?)?;
    }
    let avg_q = sum / calibration.len() as f64;

    let a = 1.0 / n_large as f64;
    let b = if avg_q > 0.0 {
        (1.0 - n_small as f64 / n_large as f64) / avg_q
    } else {
        0.0
    };
    Ok(MassNormalizers { grid, a, b, avg_q, r_small, r_large })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassGrid {
    grid: GridSpec,
    m: Vec<f64>,
}

/// `m(x) = a + q(x)·b` for every cell.
pub fn privacy_mass(qg: &QualityGrid, n: &MassNormalizers) -> Result<MassGrid> {
    if n.grid != *qg.grid() {
        return Err(Error::GridMismatch);
    }
    let m = qg.values().iter().map(|&q| n.a + q * n.b).collect();
    MassGrid::new(*qg.grid(), m)
}

impl MassGrid {
    /// Wraps precomputed masses; every value must be positive and finite.
    pub fn new(grid: GridSpec, m: Vec<f64>) -> Result<Self> {
        if m.len() != grid.len() {
            return Err(Error::DomainMismatch("mass vector length differs from grid size"));
        }
        if let Some(&bad) = m.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(alloc::format!("mass must be positive, got {bad}")));
        }
        Ok(Self { grid, m })
    }

    pub fn uniform(grid: GridSpec, mass: f64) -> Result<Self> {
        Self::new(grid, alloc::vec![mass; grid.len()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn get(&self, c: CellId) -> f64 {
        self.m[c.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.m
    }

    /// `m(A)`, summed in the given order.
    pub fn mass_of(&self, cells: &[CellId]) -> Result<f64> {
        let mut total = 0.0;
        for &c in cells {
            self.grid.check(c)?;
            total += self.m[c.index()];
        }
        Ok(total)
    }

    pub fn total(&self) -> f64 {
        self.m.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: u32) -> GridSpec {
        GridSpec::planar(100.0, n, n).unwrap()
    }

    fn interior(g: &GridSpec, margin: u32) -> Vec<CellId> {
        g.cells().filter(|&c| g.border_distance(c) >= margin).collect()
    }

    #[test]
    fn a_from_large_ball() {
        let qg = QualityGrid::zeros(grid(20));
        let n = compute_normalizers(&qg, 100.0, 200.0, &[CellId(0)]).unwrap();
        assert_eq!(n.a, 1.0 / 13.0);
        assert_eq!(n.b, 0.0);
        assert_eq!(n.avg_q, 0.0);
        let mg = privacy_mass(&qg, &n).unwrap();
        assert!(mg.values().iter().all(|&m| m == 1.0 / 13.0));
    }

    #[test]
    fn empty_region_large_ball_holds_one_unit() {
        let g = grid(30);
        let qg = QualityGrid::zeros(g);
        let n = compute_normalizers(&qg, 300.0, 700.0, &qg.default_calibration()).unwrap();
        let mg = privacy_mass(&qg, &n).unwrap();
        let x = g.cell(15, 15).unwrap();
        let m = mg.mass_of(&g.euclid_ball(x, 700.0).unwrap()).unwrap();
        assert!((m - 1.0).abs() < 1e-12, "{m}");
    }

    #[test]
    fn uniform_quality_b() {
        let g = grid(30);
        let c = 3.5;
        let qg = QualityGrid::new(g, alloc::vec![c; g.len()]).unwrap();
        let cal = interior(&g, 2);
        let n = compute_normalizers(&qg, 100.0, 200.0, &cal).unwrap();
        assert!((n.avg_q - 5.0 * c).abs() < 1e-12);
        assert!((n.b - 8.0 / (65.0 * c)).abs() < 1e-15);
    }

    #[test]
    fn average_small_ball_holds_one_unit() {
        let g = grid(40);
        let qg = QualityGrid::new(g, alloc::vec![0.7; g.len()]).unwrap();
        let cal = interior(&g, 3);
        let n = compute_normalizers(&qg, 300.0, 3000.0, &cal).unwrap();
        let mg = privacy_mass(&qg, &n).unwrap();
        for &x in &cal {
            let m = mg.mass_of(&g.euclid_ball(x, 300.0).unwrap()).unwrap();
            assert!((m - 1.0).abs() < 1e-9, "{m}");
        }
    }

    #[test]
    fn direct_formula() {
        let g = grid(3);
        let mut qg = QualityGrid::zeros(g);
        qg.set(CellId(4), 0.5).unwrap();
        let n = MassNormalizers { grid: g, a: 1.0 / 13.0, b: 2.0, avg_q: 1.0, r_small: 1.0, r_large: 2.0 };
        let mg = privacy_mass(&qg, &n).unwrap();
        assert!((mg.get(CellId(4)) - 1.076_923_076_923_077).abs() < 1e-12);
        assert_eq!(mg.get(CellId(0)), 1.0 / 13.0);
        let total = n.a * 9.0 + n.b * 0.5;
        assert!((mg.total() - total).abs() < 1e-12);
    }

    #[test]
    fn mass_of_examples() {
        let g = grid(4);
        let mg = MassGrid::new(g, (1..=16).map(|v| v as f64).collect()).unwrap();
        assert_eq!(mg.mass_of(&[]).unwrap(), 0.0);
        assert_eq!(mg.mass_of(&[CellId(3)]).unwrap(), 4.0);
        let a = [CellId(0), CellId(5)];
        let b = [CellId(7), CellId(9)];
        let both = [CellId(0), CellId(5), CellId(7), CellId(9)];
        assert_eq!(mg.mass_of(&both).unwrap(), mg.mass_of(&a).unwrap() + mg.mass_of(&b).unwrap());
        assert!(mg.mass_of(&[CellId(16)]).is_err());
    }

    #[test]
    fn rejections() {
        let qg = QualityGrid::zeros(grid(5));
        assert_eq!(compute_normalizers(&qg, 100.0, 200.0, &[]), Err(Error::EmptyCalibration));
        assert!(compute_normalizers(&qg, 200.0, 100.0, &[CellId(0)]).is_err());
        assert!(compute_normalizers(&qg, 0.0, 100.0, &[CellId(0)]).is_err());
        // same lattice count
        assert!(compute_normalizers(&qg, 100.0, 120.0, &[CellId(0)]).is_err());
        let other = GridSpec::planar(50.0, 5, 5).unwrap();
        let n = MassNormalizers { grid: other, a: 0.1, b: 0.0, avg_q: 0.0, r_small: 1.0, r_large: 2.0 };
        assert_eq!(privacy_mass(&qg, &n), Err(Error::GridMismatch));
        assert!(QualityGrid::new(grid(2), alloc::vec![0.0, -1.0, 0.0, 0.0]).is_err());
        assert!(MassGrid::new(grid(1), alloc::vec![0.0]).is_err());
    }

    #[test]
    fn aggregation() {
        assert_eq!(aggregate_quality(&[3.0, 10.0], &[1.0, 0.1]).unwrap(), 4.0);
        assert!(aggregate_quality(&[1.0], &[1.0, 2.0]).is_err());
        assert!(aggregate_quality(&[-1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_quality(q in proptest::collection::vec(0.0f64..50.0, 64), bump in 0usize..64, by in 0.0f64..10.0) {
            let g = grid(8);
            let base = QualityGrid::new(g, q.clone()).unwrap();
            let n = compute_normalizers(&base, 100.0, 300.0, &base.default_calibration()).unwrap();
            let mut raised = q;
            raised[bump] += by;
            let lo = privacy_mass(&base, &n).unwrap();
            let hi = privacy_mass(&QualityGrid::new(g, raised).unwrap(), &n).unwrap();
            prop_assert!(lo.values().iter().zip(hi.values()).all(|(a, b)| a <= b));
            prop_assert!(lo.values().iter().all(|&m| m >= n.a));
        }

        #[test]
        fn quality_scale_invariance(q in proptest::collection::vec(0.0f64..50.0, 64), scale in 0.01f64..100.0) {
            let g = grid(8);
            let a = QualityGrid::new(g, q.clone()).unwrap();
            let b = QualityGrid::new(g, q.iter().map(|v| v * scale).collect()).unwrap();
            let cal = a.default_calibration();
            let ma = privacy_mass(&a, &compute_normalizers(&a, 100.0, 300.0, &cal).unwrap()).unwrap();
            let mb = privacy_mass(&b, &compute_normalizers(&b, 100.0, 300.0, &cal).unwrap()).unwrap();
            for (x, y) in ma.values().iter().zip(mb.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
            }
        }
    }
}
