mod common;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use common::{bumpy, params};
use elastic_core::metric::{audit_continuum, audit_requirement, build, build_observed, build_with_stats, fenced_distance};
use elastic_core::{CellId, FenceSet, GridSpec, MassGrid, MetricGraph};
use proptest::prelude::*;

fn all_distances(g: &MetricGraph) -> Vec<Vec<f64>> {
    g.grid().cells().map(|x| g.distances_from(x).unwrap()).collect()
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn check_axioms(g: &MetricGraph) {
    let d = all_distances(g);
    let n = d.len();
    for x in 0..n {
        assert_eq!(d[x][x], 0.0);
        for y in 0..n {
            assert!(d[x][y] >= 0.0);
            assert!(close(d[x][y], d[y][x]), "asymmetric at {x},{y}: {} vs {}", d[x][y], d[y][x]);
        }
    }
    for x in 0..n {
        for y in 0..n {
            let dxy = d[x][y];
            if dxy == f64::INFINITY {
                continue;
            }
            for z in 0..n {
                let bound = dxy + d[y][z];
                assert!(d[x][z] <= bound + 1e-9 * bound.max(1.0), "triangle fails at {x},{y},{z}");
            }
        }
    }
}

#[test]
fn axioms_hold_on_30_by_30() {
    let g = build(&bumpy(30, 30, 3), &params(2.0, 0.03), FenceSet::empty()).unwrap();
    check_axioms(&g);
}

#[test]
fn built_graph_passes_audit() {
    let mg = bumpy(24, 20, 11);
    let p = params(2.0, 0.05);
    let (g, stats) = build_with_stats(&mg, &p, FenceSet::empty()).unwrap();
    assert!(stats.usable > 0);
    assert!(audit_continuum(&g, &mg, &p.requirement).unwrap().is_empty());
    let levels: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
    assert!(audit_requirement(&g, &mg, &p.requirement, &levels).unwrap().is_empty());
}

#[test]
fn removing_an_edge_is_caught() {
    let mg = bumpy(12, 12, 5);
    let p = params(2.0, 0.0);
    let g = build(&mg, &p, FenceSet::empty()).unwrap();
    assert!(audit_continuum(&g, &mg, &p.requirement).unwrap().is_empty());
    let caught = (0..g.edges().len()).any(|i| {
        let cut = g.without_edge(i).unwrap();
        !audit_continuum(&cut, &mg, &p.requirement).unwrap().is_empty()
    });
    assert!(caught);
}

#[test]
fn levels_never_decrease() {
    let mg = bumpy(18, 14, 2);
    let p = params(2.0, 0.05);
    let mut last: Option<Vec<f64>> = None;
    let mut sweeps = 0;
    build_observed(&mg, &p, FenceSet::empty(), |_, levels| {
        sweeps += 1;
        assert!(levels.iter().all(|&l| (0.0..=2.0).contains(&l)));
        if let Some(prev) = &last {
            assert!(prev.iter().zip(levels).all(|(a, b)| b >= a));
        }
        last = Some(levels.to_vec());
    })
    .unwrap();
    assert!(sweeps > 0);
}

#[test]
fn edge_weights_and_balls() {
    let mg = bumpy(16, 16, 8);
    let g = build(&mg, &params(1.5, 0.05), FenceSet::empty()).unwrap();
    assert!(g.edges().iter().all(|e| e.weight >= 0.0 && e.weight <= 1.5));
    for x in [CellId(0), CellId(77), CellId(200)] {
        let mut prev: Vec<CellId> = Vec::new();
        for i in 0..=20 {
            let ball = g.ball(x, i as f64 * 0.1).unwrap();
            assert!(ball.contains(&x));
            assert!(prev.iter().all(|c| ball.binary_search(c).is_ok()));
            prev = ball;
        }
    }
}

fn rect(g: &GridSpec, c0: u32, r0: u32, w: u32, h: u32) -> Vec<CellId> {
    (r0..r0 + h).flat_map(|r| (c0..c0 + w).map(move |c| g.cell(c, r).unwrap())).collect()
}

/// Shortest paths that never touch a fenced cell.
fn open_distances(g: &MetricGraph, x: CellId) -> Vec<f64> {
    let n = g.grid().len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[x.index()] = 0.0;
    heap.push(Reverse((0u64, x.0)));
    while let Some(Reverse((bits, v))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[v as usize] {
            continue;
        }
        for &(w, wt) in g.neighbors(CellId(v)) {
            if g.is_fenced(CellId(w)) {
                continue;
            }
            let nd = d + wt;
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(Reverse((nd.to_bits(), w)));
            }
        }
    }
    dist
}

#[test]
fn fences_follow_the_fenced_metric() {
    let mg = bumpy(14, 14, 4);
    let grid = *mg.grid();
    let mut l_shape = rect(&grid, 9, 2, 3, 1);
    l_shape.extend(rect(&grid, 9, 3, 1, 2));
    let fences = FenceSet::new(vec![rect(&grid, 3, 8, 2, 2), l_shape]).unwrap();
    let g = build(&mg, &params(2.0, 0.0), fences.clone()).unwrap();

    for x in grid.cells() {
        let dx = g.distances_from(x).unwrap();
        let open = if g.is_fenced(x) { None } else { Some(open_distances(&g, x)) };
        for y in grid.cells() {
            let expected = fenced_distance(|_, b| open.as_ref().unwrap()[b.index()], &fences, x, y);
            let got = dx[y.index()];
            if expected.is_finite() && expected != 0.0 {
                assert!((got - expected).abs() <= 1e-12 * expected.max(1.0), "{x} -> {y}: {got} vs {expected}");
            } else {
                assert_eq!(got, expected, "{x} -> {y}");
            }
        }
    }
    assert!(g.usable().iter().all(|&c| !g.is_fenced(c)));
}

#[test]
fn mass_starved_cells_are_not_usable() {
    let g = GridSpec::planar(100.0, 6, 6).unwrap();
    let mg = MassGrid::uniform(g, 0.01).unwrap();
    let (graph, stats) = build_with_stats(&mg, &params(2.0, 0.0), FenceSet::empty()).unwrap();
    assert_eq!(stats.usable, 0);
    assert_eq!(stats.stuck, 36);
    assert!(graph.usable().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn axioms_on_random_grids(nx in 2u32..14, ny in 2u32..14, seed in 0u64..1000, l_top in 0.5f64..2.5) {
        let g = build(&bumpy(nx, ny, seed), &params(l_top, 0.0), FenceSet::empty()).unwrap();
        check_axioms(&g);
    }

    #[test]
    fn audit_passes_on_random_grids(nx in 4u32..16, ny in 4u32..16, seed in 0u64..1000) {
        let mg = bumpy(nx, ny, seed);
        let p = params(1.5, 0.1);
        let g = build(&mg, &p, FenceSet::empty()).unwrap();
        prop_assert!(audit_continuum(&g, &mg, &p.requirement).unwrap().is_empty());
    }
}
