use alloc::vec::Vec;
use core::ops::ControlFlow;

use super::search::BoundedSearch;
use super::{MetricGraph, Requirement};
use crate::error::{Error, Result};
use crate::mass::MassGrid;

const TOLERANCE: f64 = 1e-9;

/// A usable cell whose `level`-ball holds less mass than required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub cell: crate::CellId,
    pub level: f64,
    pub required: f64,
    pub achieved: f64,
}

/// Checks `m(B_l(x)) >= req(l)` for every usable cell at every sampled level.
pub fn audit_requirement(
    g: &MetricGraph,
    mg: &MassGrid,
    r: &Requirement,
    levels: &[f64],
) -> Result<Vec<Violation>> {
    if mg.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    if let Some(&bad) = levels.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::Negative { what: "level", value: bad });
    }
    let mut sorted: Vec<f64> = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let Some(&cap) = sorted.last() else {
        return Ok(Vec::new());
    };

    let mut out = Vec::new();
    let mut search = BoundedSearch::new(g.grid().len());
    let mut reach: Vec<(f64, f64)> = Vec::new();
    for x in g.usable() {
        reach.clear();
        search.start(x.0);
        search.extend(g.adjacency(), cap, |v, d| {
            reach.push((d, mg.values()[v as usize]));
            ControlFlow::Continue(())
        });
        // `reach` is in nondecreasing distance order.
        let mut i = 0;
        let mut mass = 0.0;
        for &l in &sorted {
            while i < reach.len() && reach[i].0 <= l {
                mass += reach[i].1;
                i += 1;
            }
            let required = r.req_unchecked(l);
            if mass < required - TOLERANCE {
                out.push(Violation { cell: x, level: l, required, achieved: mass });
            }
        }
    }
    Ok(out)
}

/// Checks the requirement for every level in `[0, l_top]`, not just a sample.
///
/// Between consecutive distances the ball is constant while `req` grows, so
/// the binding level in each gap is the next distance itself (approached
/// from below) and `l_top` for the last gap. One violation is reported per
/// failing gap, at the level where it binds.
pub fn audit_continuum(g: &MetricGraph, mg: &MassGrid, r: &Requirement) -> Result<Vec<Violation>> {
    if mg.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let l_top = g.params().l_top;
    let mut out = Vec::new();
    let mut search = BoundedSearch::new(g.grid().len());
    let mut reach: Vec<(f64, f64)> = Vec::new();
    for x in g.usable() {
        reach.clear();
        search.start(x.0);
        search.extend(g.adjacency(), l_top, |v, d| {
            reach.push((d, mg.values()[v as usize]));
            ControlFlow::Continue(())
        });
        let mut mass = 0.0;
        let mut i = 0;
        while i < reach.len() {
            let d = reach[i].0;
            while i < reach.len() && reach[i].0 == d {
                mass += reach[i].1;
                i += 1;
            }
            let next = if i < reach.len() { reach[i].0 } else { l_top };
            let required = r.req_unchecked(next);
            if mass < required - TOLERANCE {
                out.push(Violation { cell: x, level: next, required, achieved: mass });
            }
        }
    }
    Ok(out)
}
