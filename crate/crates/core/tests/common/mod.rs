#![allow(dead_code)]

use elastic_core::metric::{BuildParams, Requirement};
use elastic_core::{GridSpec, MassGrid};

pub fn params(l_top: f64, frame: f64) -> BuildParams {
    BuildParams::new(Requirement::new(core::f64::consts::LN_2).unwrap(), l_top, frame).unwrap()
}

/// Two bumps over a thin floor, with a ripple so no two rows look alike.
pub fn bumpy(nx: u32, ny: u32, seed: u64) -> MassGrid {
    let g = GridSpec::planar(100.0, nx, ny).unwrap();
    let s = (seed % 97) as f64 / 97.0;
    let (cx1, cy1) = (nx as f64 * (0.25 + 0.2 * s), ny as f64 * 0.3);
    let (cx2, cy2) = (nx as f64 * 0.7, ny as f64 * (0.75 - 0.2 * s));
    let w = (nx.max(ny) as f64 / 5.0).max(1.5);
    let m = g
        .cells()
        .map(|c| {
            let (col, row) = g.col_row(c);
            let (x, y) = (col as f64, row as f64);
            let b1 = (-((x - cx1).powi(2) + (y - cy1).powi(2)) / (2.0 * w * w)).exp();
            let b2 = 0.6 * (-((x - cx2).powi(2) + (y - cy2).powi(2)) / (2.0 * w * w)).exp();
            let ripple = 1.0 + 0.3 * ((x * 0.7 + s * 5.0).sin() * (y * 0.45).cos());
            0.02 + 0.4 * (b1 + b2) * ripple
        })
        .collect();
    MassGrid::new(g, m).unwrap()
}
