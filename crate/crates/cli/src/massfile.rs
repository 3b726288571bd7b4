use std::path::Path;

use elastic_core::{GridSpec, MassGrid, MassNormalizers};

use crate::atomic::{read_to_string, write_atomic};
use crate::csvio::{check_width, field, records};
use crate::error::{GeoError, Result};
use crate::gridfile::{grid_meta, parse_grid_meta};
use crate::keyvalue::meta_line;
use crate::quality::Weights;

pub fn mass_meta(n: &MassNormalizers, weights: &Weights) -> String {
    meta_line(
        "mass",
        &[
            ("a", n.a.to_string()),
            ("b", n.b.to_string()),
            ("avg_q", n.avg_q.to_string()),
            ("r_small", n.r_small.to_string()),
            ("r_large", n.r_large.to_string()),
            ("weights", weights.format()),
        ],
    )
}

/// Writes `cell_index,mass` preceded by the grid, the normalizers and any
/// extra metadata lines.
pub fn write_mass(path: &Path, mg: &MassGrid, meta: &[String]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{}", grid_meta(mg.grid()))?;
        for m in meta {
            writeln!(w, "{m}")?;
        }
        writeln!(w, "cell_index,mass")?;
        for (i, m) in mg.values().iter().enumerate() {
            writeln!(w, "{i},{m}")?;
        }
        Ok(())
    })
}

pub fn read_mass(path: &Path) -> Result<MassGrid> {
    parse_mass(path, &read_to_string(path)?)
}

/// Every cell must be listed exactly once; the grid comes from the
/// embedded `# grid:` line.
pub fn parse_mass(path: &Path, text: &str) -> Result<MassGrid> {
    let grid = embedded_grid(path, text)?;
    let (header, rows) = records(path, text)?;
    if header != ["cell_index", "mass"] {
        let line = text.lines().position(|l| !l.trim().is_empty() && !l.starts_with('#')).map_or(1, |i| i + 1);
        return Err(GeoError::parse(path, line as u64, format!("expected header `cell_index,mass`, got `{}`", header.join(","))));
    }
    let mut m = vec![f64::NAN; grid.len()];
    for (line, r) in rows {
        check_width(path, line, &r, 2)?;
        let i: usize = field(path, line, &r, 0, "cell_index")?;
        let v: f64 = field(path, line, &r, 1, "mass")?;
        if i >= m.len() {
            return Err(GeoError::parse(path, line, format!("cell {i} outside a grid of {} cells", m.len())));
        }
        if !m[i].is_nan() {
            return Err(GeoError::parse(path, line, format!("cell {i} listed twice")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(GeoError::parse(path, line, format!("mass must be positive, got {v}")));
        }
        m[i] = v;
    }
    if let Some(i) = m.iter().position(|v| v.is_nan()) {
        return Err(GeoError::parse(path, 0, format!("cell {i} has no mass")));
    }
    Ok(MassGrid::new(grid, m)?)
}

pub fn embedded_grid(path: &Path, text: &str) -> Result<GridSpec> {
    for (i, l) in text.lines().enumerate() {
        if let Some(g) = parse_grid_meta(path, i as u64 + 1, l)? {
            return Ok(g);
        }
    }
    Err(GeoError::parse(path, 1, "no `# grid:` metadata line"))
}
