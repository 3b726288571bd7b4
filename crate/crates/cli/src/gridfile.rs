use std::path::Path;

use elastic_core::{GeoCoord, GridSpec};

use crate::atomic::{read_to_string, write_atomic};
use crate::error::{GeoError, Result};
use crate::keyvalue::{meta_line, parse_lines, parse_meta, parse_num};

const KEYS: [&str; 5] = ["origin_lat", "origin_lon", "cell_size_m", "nx", "ny"];

pub fn read_grid(path: &Path) -> Result<GridSpec> {
    parse_grid(path, &read_to_string(path)?)
}

pub fn parse_grid(path: &Path, text: &str) -> Result<GridSpec> {
    let entries = parse_lines(path, text)?;
    if let Some(e) = entries.iter().find(|e| !KEYS.contains(&e.key.as_str())) {
        return Err(GeoError::parse(path, e.line, format!("unknown key `{}`", e.key)));
    }
    let get = |k: &str| {
        entries
            .iter()
            .find(|e| e.key == k)
            .ok_or_else(|| GeoError::parse(path, 0, format!("missing key `{k}`")))
    };
    let lat: f64 = parse_num(path, get("origin_lat")?)?;
    let lon: f64 = parse_num(path, get("origin_lon")?)?;
    let size: f64 = parse_num(path, get("cell_size_m")?)?;
    let nx: u32 = parse_num(path, get("nx")?)?;
    let ny: u32 = parse_num(path, get("ny")?)?;
    let line = get("origin_lat")?.line;
    let origin = GeoCoord::new(lat, lon).map_err(|e| GeoError::parse(path, line, e.to_string()))?;
    GridSpec::new(origin, size, nx, ny).map_err(|e| GeoError::parse(path, line, e.to_string()))
}

pub fn format_grid(g: &GridSpec) -> String {
    let o = g.origin();
    format!(
        "origin_lat = {}\norigin_lon = {}\ncell_size_m = {}\nnx = {}\nny = {}\n",
        o.lat,
        o.lon,
        g.cell_size(),
        g.nx(),
        g.ny()
    )
}

pub fn write_grid(path: &Path, g: &GridSpec) -> Result<()> {
    let text = format_grid(g);
    write_atomic(path, |w| w.write_all(text.as_bytes()))
}

/// `# grid: origin_lat=..,origin_lon=..,cell_size_m=..,nx=..,ny=..`
pub fn grid_meta(g: &GridSpec) -> String {
    let o = g.origin();
    meta_line(
        "grid",
        &[
            ("origin_lat", o.lat.to_string()),
            ("origin_lon", o.lon.to_string()),
            ("cell_size_m", g.cell_size().to_string()),
            ("nx", g.nx().to_string()),
            ("ny", g.ny().to_string()),
        ],
    )
}

/// Reads a grid embedded as a `# grid:` line. `Ok(None)` if `line` is some
/// other line.
pub fn parse_grid_meta(path: &Path, line_no: u64, line: &str) -> Result<Option<GridSpec>> {
    let Some(pairs) = parse_meta("grid", line) else {
        return Ok(None);
    };
    let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    parse_grid(path, &text)
        .map(Some)
        .map_err(|e| match e {
            GeoError::Parse { msg, .. } => GeoError::parse(path, line_no, format!("embedded grid: {msg}")),
            other => other,
        })
}
