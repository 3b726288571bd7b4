use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::ControlFlow;

use super::search::BoundedSearch;
use super::{BuildParams, Edge, FenceSet, MetricGraph, NO_FENCE};
use crate::error::Result;
use crate::geogrid::{CellId, GridSpec};
use crate::mass::MassGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildStats {
    pub iterations: usize,
    /// Edges added by the builder, fence edges excluded.
    pub edges: usize,
    pub fence_edges: usize,
    pub usable: usize,
    /// Cells that ran out of candidates before completing.
    pub stuck: usize,
    /// Incomplete cells left in the frame when the builder stopped.
    pub frame_incomplete: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Active,
    Complete,
    Stuck,
}

/// Builds the elastic metric for `mg`. See [`build_with_stats`].
pub fn build(mg: &MassGrid, params: &BuildParams, fences: FenceSet) -> Result<MetricGraph> {
    build_with_stats(mg, params, fences).map(|(g, _)| g)
}

/// Grows a graph until every cell's balls satisfy the requirement up to
/// `l_top`.
///
/// Each cell keeps a level `l_x` up to which its requirement already holds,
/// starting from its own mass. Iterations sweep the cells in row-major
/// order; an incomplete cell refreshes `l_x` from the mass of its current
/// `l_x`-ball and, if still below `l_top`, links with weight `l_x` to the
/// nearest cell (Euclidean, then angle from east, then index) that is not
/// fenced and not already within `l_x`. Fences are zero-weight stars that
/// start complete and are never offered as candidates.
///
/// The sweep stops once every remaining incomplete cell lies in the frame,
/// or once no cell can progress. A cell that exhausts its candidates is
/// left incomplete.
pub fn build_with_stats(
    mg: &MassGrid,
    params: &BuildParams,
    fences: FenceSet,
) -> Result<(MetricGraph, BuildStats)> {
    build_observed(mg, params, fences, |_, _| {})
}

/// [`build_with_stats`], calling `observe(iteration, levels)` after every
/// sweep.
pub fn build_observed<O>(
    mg: &MassGrid,
    params: &BuildParams,
    fences: FenceSet,
    mut observe: O,
) -> Result<(MetricGraph, BuildStats)>
where
    O: FnMut(usize, &[f64]),
{
    let grid = *mg.grid();
    fences.check(&grid)?;
    let n = grid.len();
    let req = params.requirement;
    let l_top = params.l_top;
    let full_mass = req.req_unchecked(l_top);
    let frame = params.frame_width(&grid);
    let fence_of = fences.lookup(n);
    let mass = mg.values();

    let mut edges: Vec<Edge> = Vec::new();
    let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut level = vec![0.0f64; n];
    let mut state = vec![State::Active; n];
    let mut stats = BuildStats::default();

    for f in fences.fences() {
        let hub = f[0];
        for &c in &f[1..] {
            push_edge(&mut edges, &mut adjacency, hub, c, 0.0);
            stats.fence_edges += 1;
        }
        for &c in f {
            level[c.index()] = l_top;
            state[c.index()] = State::Complete;
        }
    }
    for x in 0..n {
        if fence_of[x] != NO_FENCE {
            continue;
        }
        if mass[x] >= full_mass {
            level[x] = l_top;
            state[x] = State::Complete;
        } else {
            level[x] = l_top.min(req.req_inv_unchecked(mass[x]));
        }
    }

    let offsets = candidate_offsets(&grid);
    let mut cursor = vec![0u32; n];
    let mut search = BoundedSearch::new(n);
    let nx = grid.nx() as i64;
    let ny = grid.ny() as i64;

    loop {
        let any_active = state.iter().any(|s| *s == State::Active);
        if !any_active {
            break;
        }
        let only_frame = grid
            .cells()
            .all(|c| state[c.index()] != State::Active || grid.border_distance(c) < frame);
        if only_frame {
            break;
        }
        stats.iterations += 1;

        for x in 0..n {
            if state[x] != State::Active {
                continue;
            }
            let lx = level[x];
            search.start(x as u32);
            let mut ball_mass = 0.0;
            search.extend(&adjacency, lx, |v, _| {
                ball_mass += mass[v as usize];
                if ball_mass >= full_mass {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if ball_mass >= full_mass {
                level[x] = l_top;
                state[x] = State::Complete;
                continue;
            }
            let updated = l_top.min(req.req_inv_unchecked(ball_mass)).max(lx);
            if updated >= l_top {
                level[x] = l_top;
                state[x] = State::Complete;
                continue;
            }
            if updated > lx {
                search.extend(&adjacency, updated, |_, _| ControlFlow::Continue(()));
            }
            level[x] = updated;

            let (col, row) = grid.col_row(CellId(x as u32));
            let (col, row) = (col as i64, row as i64);
            let mut k = cursor[x] as usize;
            let mut found = None;
            while k < offsets.len() {
                let (dc, dr) = offsets[k];
                k += 1;
                let (c, r) = (col + dc as i64, row + dr as i64);
                if c < 0 || r < 0 || c >= nx || r >= ny {
                    continue;
                }
                let cand = (r * nx + c) as u32;
                if fence_of[cand as usize] != NO_FENCE || search.is_settled(cand) {
                    continue;
                }
                found = Some(cand);
                break;
            }
            cursor[x] = k as u32;
            match found {
                Some(cand) => {
                    push_edge(&mut edges, &mut adjacency, CellId(x as u32), CellId(cand), updated);
                    stats.edges += 1;
                }
                None => state[x] = State::Stuck,
            }
        }
        observe(stats.iterations, &level);
    }

    let mut usable = vec![false; n];
    for c in grid.cells() {
        let x = c.index();
        if fence_of[x] != NO_FENCE {
            continue;
        }
        let in_frame = grid.border_distance(c) < frame;
        match state[x] {
            State::Complete if !in_frame => {
                usable[x] = true;
                stats.usable += 1;
            }
            State::Complete => {}
            State::Stuck => stats.stuck += 1,
            State::Active => stats.frame_incomplete += 1,
        }
    }

    let graph = MetricGraph::from_parts(grid, *params, edges, fences, usable, level)?;
    Ok((graph, stats))
}

fn push_edge(edges: &mut Vec<Edge>, adjacency: &mut [Vec<(u32, f64)>], a: CellId, b: CellId, w: f64) {
    edges.push(Edge { a, b, weight: w });
    adjacency[a.index()].push((b.0, w));
    adjacency[b.index()].push((a.0, w));
}

/// Every nonzero lattice offset that fits in the grid, ordered by length,
/// then by angle counterclockwise from east.
fn candidate_offsets(grid: &GridSpec) -> Vec<(i32, i32)> {
    let mx = grid.nx() as i32 - 1;
    let my = grid.ny() as i32 - 1;
    let mut keyed: Vec<(u64, f64, i32, i32)> = Vec::with_capacity(((2 * mx + 1) * (2 * my + 1)) as usize);
    for dr in -my..=my {
        for dc in -mx..=mx {
            if dc == 0 && dr == 0 {
                continue;
            }
            let len2 = (dc as i64 * dc as i64 + dr as i64 * dr as i64) as u64;
            let mut angle = libm::atan2(dr as f64, dc as f64);
            if angle < 0.0 {
                angle += TAU;
            }
            keyed.push((len2, angle, dc, dr));
        }
    }
    keyed.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keyed.into_iter().map(|(_, _, dc, dr)| (dc, dr)).collect()
}
