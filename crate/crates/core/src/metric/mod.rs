//! Elastic distinguishability metrics.
//!
//! The metric is induced by an undirected weighted graph over grid cells:
//! `dX(x, y)` is the weight of a shortest path, infinite when disconnected.
//! [`build`] grows the graph until every usable cell's balls hold the mass
//! demanded by a [`Requirement`].

mod audit;
mod build;
mod search;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::geogrid::{CellId, GridSpec};

pub use audit::{audit_continuum, audit_requirement, Violation};
pub use build::{build, build_observed, build_with_stats, BuildStats};
pub(crate) use search::BoundedSearch;

/// Quadratic mass requirement `req(l) = (l / l_star)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Requirement {
    l_star: f64,
}

impl Requirement {
    pub fn new(l_star: f64) -> Result<Self> {
        if !(l_star > 0.0 && l_star.is_finite()) {
            return Err(Error::InvalidParameter(format!("l_star must be positive, got {l_star}")));
        }
        Ok(Self { l_star })
    }

    pub fn l_star(&self) -> f64 {
        self.l_star
    }

    /// Mass required within level `l`.
    pub fn req(&self, l: f64) -> Result<f64> {
        if !(l >= 0.0) {
            return Err(Error::Negative { what: "level", value: l });
        }
        Ok(self.req_unchecked(l))
    }

    /// Level at which `m` units of mass must be found.
    pub fn req_inv(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::Negative { what: "mass", value: m });
        }
        Ok(self.req_inv_unchecked(m))
    }

    #[inline]
    pub(crate) fn req_unchecked(&self, l: f64) -> f64 {
        let r = l / self.l_star;
        r * r
    }

    #[inline]
    pub(crate) fn req_inv_unchecked(&self, m: f64) -> f64 {
        self.l_star * libm::sqrt(m)
    }
}

/// Disjoint, nonempty cell sets inside which all cells are at distance 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FenceSet {
    fences: Vec<Vec<CellId>>,
}

impl FenceSet {
    /// Each fence is sorted and deduplicated; empty or overlapping fences are
    /// rejected.
    pub fn new(fences: Vec<Vec<CellId>>) -> Result<Self> {
        let mut out = Vec::with_capacity(fences.len());
        for (i, mut f) in fences.into_iter().enumerate() {
            if f.is_empty() {
                return Err(Error::InvalidFences(format!("fence {i} is empty")));
            }
            f.sort_unstable();
            f.dedup();
            out.push(f);
        }
        let mut all: Vec<(CellId, usize)> =
            out.iter().enumerate().flat_map(|(i, f)| f.iter().map(move |&c| (c, i))).collect();
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidFences(format!(
                "cell {} belongs to fences {} and {}",
                w[0].0, w[0].1, w[1].1
            )));
        }
        Ok(Self { fences: out })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.fences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fences.is_empty()
    }

    pub fn fences(&self) -> &[Vec<CellId>] {
        &self.fences
    }

    pub fn fence_of(&self, c: CellId) -> Option<usize> {
        self.fences.iter().position(|f| f.binary_search(&c).is_ok())
    }

    pub(crate) fn check(&self, grid: &GridSpec) -> Result<()> {
        for f in &self.fences {
            for &c in f {
                grid.check(c)?;
            }
        }
        Ok(())
    }

    /// Per-cell fence index, `u32::MAX` for unfenced cells.
    pub(crate) fn lookup(&self, len: usize) -> Vec<u32> {
        let mut out = vec![NO_FENCE; len];
        for (i, f) in self.fences.iter().enumerate() {
            for c in f {
                out[c.index()] = i as u32;
            }
        }
        out
    }
}

pub(crate) const NO_FENCE: u32 = u32::MAX;

/// The fenced metric `d_F`: zero inside one fence, the base metric between
/// unfenced cells, infinite otherwise.
pub fn fenced_distance<F>(base: F, fences: &FenceSet, x: CellId, y: CellId) -> f64
where
    F: FnOnce(CellId, CellId) -> f64,
{
    match (fences.fence_of(x), fences.fence_of(y)) {
        (Some(a), Some(b)) if a == b => 0.0,
        (None, None) => base(x, y),
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildParams {
    pub requirement: Requirement,
    /// Level at which a cell's requirement counts as complete.
    pub l_top: f64,
    /// Width of the border band excluded from the secrets, as a fraction of
    /// the longer grid side.
    pub frame_fraction: f64,
}

impl BuildParams {
    pub fn new(requirement: Requirement, l_top: f64, frame_fraction: f64) -> Result<Self> {
        if !(l_top > 0.0 && l_top.is_finite()) {
            return Err(Error::InvalidParameter(format!("l_top must be positive, got {l_top}")));
        }
        if !(0.0..0.5).contains(&frame_fraction) {
            return Err(Error::InvalidParameter(format!(
                "frame fraction must lie in [0, 0.5), got {frame_fraction}"
            )));
        }
        Ok(Self { requirement, l_top, frame_fraction })
    }

    /// Frame width in cells: cells closer than this (Chebyshev) to the
    /// border are in the frame.
    pub fn frame_width(&self, grid: &GridSpec) -> u32 {
        libm::round(self.frame_fraction * grid.nx().max(grid.ny()) as f64) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: CellId,
    pub b: CellId,
    pub weight: f64,
}

/// A built elastic metric. Immutable once constructed; queries take `&self`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    grid: GridSpec,
    params: BuildParams,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(u32, f64)>>,
    fences: FenceSet,
    fence_of: Vec<u32>,
    usable: Vec<bool>,
    levels: Vec<f64>,
}

impl MetricGraph {
    /// Reassembles a graph from its stored parts (e.g. after deserializing).
    pub fn from_parts(
        grid: GridSpec,
        params: BuildParams,
        edges: Vec<Edge>,
        fences: FenceSet,
        usable: Vec<bool>,
        levels: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.len();
        if usable.len() != n || levels.len() != n {
            return Err(Error::DomainMismatch("per-cell vectors differ from grid size"));
        }
        fences.check(&grid)?;
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            grid.check(e.a)?;
            grid.check(e.b)?;
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "edge {}-{} has invalid weight {}",
                    e.a, e.b, e.weight
                )));
            }
            adjacency[e.a.index()].push((e.b.0, e.weight));
            adjacency[e.b.index()].push((e.a.0, e.weight));
        }
        let fence_of = fences.lookup(n);
        Ok(Self { grid, params, edges, adjacency, fences, fence_of, usable, levels })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fences(&self) -> &FenceSet {
        &self.fences
    }

    pub fn neighbors(&self, x: CellId) -> &[(u32, f64)] {
        &self.adjacency[x.index()]
    }

    pub(crate) fn adjacency(&self) -> &[Vec<(u32, f64)>] {
        &self.adjacency
    }

    pub fn is_fenced(&self, x: CellId) -> bool {
        self.fence_of[x.index()] != NO_FENCE
    }

    pub fn fence_index(&self, x: CellId) -> Option<usize> {
        let f = self.fence_of[x.index()];
        (f != NO_FENCE).then_some(f as usize)
    }

    pub fn is_usable(&self, x: CellId) -> bool {
        self.usable[x.index()]
    }

    pub fn usable_mask(&self) -> &[bool] {
        &self.usable
    }

    pub fn usable(&self) -> Vec<CellId> {
        self.grid.cells().filter(|c| self.usable[c.index()]).collect()
    }

    /// Unfenced cells in the border band. They are valid reports but not
    /// valid secrets.
    pub fn frame_cells(&self) -> Vec<CellId> {
        let w = self.params.frame_width(&self.grid);
        self.grid
            .cells()
            .filter(|&c| !self.is_fenced(c) && self.grid.border_distance(c) < w)
            .collect()
    }

    /// Unfenced cells outside the frame whose requirement was not completed.
    pub fn incomplete_cells(&self) -> Vec<CellId> {
        let w = self.params.frame_width(&self.grid);
        self.grid
            .cells()
            .filter(|&c| {
                !self.is_fenced(c) && !self.usable[c.index()] && self.grid.border_distance(c) >= w
            })
            .collect()
    }

    /// Level up to which each cell's requirement was certified by the builder.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, x: CellId) -> f64 {
        self.levels[x.index()]
    }

    /// Cells a secret may legally be drawn from: usable or fenced.
    pub fn is_valid_secret(&self, x: CellId) -> bool {
        self.usable[x.index()] || self.is_fenced(x)
    }

    /// Shortest-path distance; `f64::INFINITY` when disconnected.
    pub fn distance(&self, x: CellId, y: CellId) -> Result<f64> {
        self.grid.check(x)?;
        self.grid.check(y)?;
        let mut search = BoundedSearch::new(self.grid.len());
        search.start(x.0);
        let mut found = f64::INFINITY;
        search.extend(&self.adjacency, f64::INFINITY, |v, d| {
            if v == y.0 {
                found = d;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        Ok(found)
    }

    /// Distances from `x` to every cell.
    pub fn distances_from(&self, x: CellId) -> Result<Vec<f64>> {
        self.grid.check(x)?;
        let mut out = vec![f64::INFINITY; self.grid.len()];
        let mut search = BoundedSearch::new(self.grid.len());
        search.start(x.0);
        search.extend(&self.adjacency, f64::INFINITY, |v, d| {
            out[v as usize] = d;
            ControlFlow::Continue(())
        });
        Ok(out)
    }

    /// Closed ball `{y : dX(x, y) <= l}`, sorted by cell index.
    pub fn ball(&self, x: CellId, l: f64) -> Result<Vec<CellId>> {
        self.grid.check(x)?;
        if !(l >= 0.0) {
            return Err(Error::Negative { what: "level", value: l });
        }
        let mut out = Vec::new();
        let mut search = BoundedSearch::new(self.grid.len());
        search.start(x.0);
        search.extend(&self.adjacency, l, |v, _| {
            out.push(CellId(v));
            ControlFlow::Continue(())
        });
        out.sort_unstable();
        Ok(out)
    }

    /// Copy of the graph with one edge removed. Used to check that audits
    /// notice a damaged metric.
    pub fn without_edge(&self, index: usize) -> Result<Self> {
        let mut edges = self.edges.clone();
        if index >= edges.len() {
            return Err(Error::InvalidParameter(format!("no edge {index}")));
        }
        edges.remove(index);
        Self::from_parts(
            self.grid,
            self.params,
            edges,
            self.fences.clone(),
            self.usable.clone(),
            self.levels.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_graph() -> MetricGraph {
        let grid = GridSpec::planar(100.0, 4, 1).unwrap();
        let params = BuildParams::new(Requirement::new(core::f64::consts::LN_2).unwrap(), 2.0, 0.0).unwrap();
        let e = |a, b, w| Edge { a: CellId(a), b: CellId(b), weight: w };
        MetricGraph::from_parts(
            grid,
            params,
            vec![e(0, 1, 0.5), e(1, 2, 0.7), e(0, 2, 1.5)],
            FenceSet::empty(),
            vec![false; 4],
            vec![0.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn req_examples() {
        let r = Requirement::new(core::f64::consts::LN_2).unwrap();
        let ls = r.l_star();
        assert_eq!(r.req(0.0).unwrap(), 0.0);
        assert_eq!(r.req(ls).unwrap(), 1.0);
        assert_eq!(r.req(2.0 * ls).unwrap(), 4.0);
        assert!(r.req(-0.1).is_err());
        assert_eq!(r.req_inv(1.0).unwrap(), ls);
        assert_eq!(r.req_inv(0.0).unwrap(), 0.0);
        assert_eq!(r.req_inv(4.0).unwrap(), 2.0 * ls);
        assert!(r.req_inv(-1.0).is_err());
        assert!(Requirement::new(0.0).is_err());
        for m in [0.01, 0.5, 3.0, 123.4] {
            assert!((r.req(r.req_inv(m).unwrap()).unwrap() - m).abs() < 1e-12 * m.max(1.0));
        }
    }

    #[test]
    fn shortest_paths() {
        let g = line_graph();
        let (a, b, c, d) = (CellId(0), CellId(1), CellId(2), CellId(3));
        assert_eq!(g.distance(a, a).unwrap(), 0.0);
        assert!((g.distance(a, c).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(g.distance(a, d).unwrap(), f64::INFINITY);
        assert_eq!(g.ball(a, 1.0).unwrap(), [a, b]);
        assert_eq!(g.ball(a, 0.0).unwrap(), [a]);
        assert_eq!(g.ball(a, 5.0).unwrap(), [a, b, c]);
        assert!(g.ball(a, -1.0).is_err());
        assert!(g.distance(a, CellId(4)).is_err());
        let row = g.distances_from(c).unwrap();
        assert_eq!(row[1], 0.7);
        assert_eq!(row[3], f64::INFINITY);
    }

    #[test]
    fn fence_validation() {
        assert!(FenceSet::new(vec![vec![]]).is_err());
        assert!(FenceSet::new(vec![vec![CellId(1)], vec![CellId(2), CellId(1)]]).is_err());
        let f = FenceSet::new(vec![vec![CellId(3), CellId(1), CellId(3)], vec![CellId(7)]]).unwrap();
        assert_eq!(f.fences()[0], [CellId(1), CellId(3)]);
        assert_eq!(f.fence_of(CellId(3)), Some(0));
        assert_eq!(f.fence_of(CellId(7)), Some(1));
        assert_eq!(f.fence_of(CellId(2)), None);
    }

    #[test]
    fn fenced_distance_cases() {
        let f = FenceSet::new(vec![vec![CellId(0), CellId(1)], vec![CellId(5)]]).unwrap();
        let base = |_, _| 3.0;
        assert_eq!(fenced_distance(base, &f, CellId(0), CellId(1)), 0.0);
        assert_eq!(fenced_distance(base, &f, CellId(0), CellId(2)), f64::INFINITY);
        assert_eq!(fenced_distance(base, &f, CellId(0), CellId(5)), f64::INFINITY);
        assert_eq!(fenced_distance(base, &f, CellId(2), CellId(3)), 3.0);
    }

    #[test]
    fn params_validation() {
        let r = Requirement::new(1.0).unwrap();
        assert!(BuildParams::new(r, 0.0, 0.1).is_err());
        assert!(BuildParams::new(r, 1.0, 0.5).is_err());
        assert!(BuildParams::new(r, 1.0, -0.1).is_err());
        let p = BuildParams::new(r, 1.0, 0.03).unwrap();
        assert_eq!(p.frame_width(&GridSpec::planar(1.0, 50, 50).unwrap()), 2);
        assert_eq!(p.frame_width(&GridSpec::planar(1.0, 200, 100).unwrap()), 6);
    }

    #[test]
    fn without_edge_drops_exactly_one() {
        let g = line_graph();
        let h = g.without_edge(2).unwrap();
        assert_eq!(h.edges().len(), 2);
        assert!((h.distance(CellId(0), CellId(2)).unwrap() - 1.2).abs() < 1e-15);
        let k = g.without_edge(1).unwrap();
        assert_eq!(k.distance(CellId(0), CellId(2)).unwrap(), 1.5);
        assert!(g.without_edge(3).is_err());
    }
}
