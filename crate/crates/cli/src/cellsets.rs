//! Fence and region files.

use std::path::Path;

use elastic_core::{CellId, FenceSet, GridSpec};

use crate::atomic::read_to_string;
use crate::csvio::{cell_field, check_width, field, records};
use crate::error::{GeoError, Result};

fn rect(path: &Path, line: u64, r: &csv::StringRecord, at: usize, g: &GridSpec) -> Result<Vec<CellId>> {
    let c0: u32 = field(path, line, r, at, "col_min")?;
    let r0: u32 = field(path, line, r, at + 1, "row_min")?;
    let c1: u32 = field(path, line, r, at + 2, "col_max")?;
    let r1: u32 = field(path, line, r, at + 3, "row_max")?;
    if c0 > c1 || r0 > r1 {
        return Err(GeoError::parse(path, line, "rectangle has min above max"));
    }
    if c1 >= g.nx() || r1 >= g.ny() {
        return Err(GeoError::parse(path, line, format!("rectangle leaves the {}x{} grid", g.nx(), g.ny())));
    }
    Ok((r0..=r1).flat_map(|row| (c0..=c1).map(move |col| g.cell(col, row).unwrap())).collect())
}

enum Shape {
    Index,
    ColRow,
    Rect,
}

fn shape(path: &Path, text: &str, cols: &[String], forms: &str) -> Result<Shape> {
    let c: Vec<&str> = cols.iter().map(String::as_str).collect();
    match c.as_slice() {
        ["cell_index"] => Ok(Shape::Index),
        ["col", "row"] => Ok(Shape::ColRow),
        ["col_min", "row_min", "col_max", "row_max"] => Ok(Shape::Rect),
        _ => {
            let line = text.lines().position(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#')).map_or(1, |i| i + 1);
            Err(GeoError::parse(path, line as u64, format!("expected header {forms}")))
        }
    }
}

pub fn read_fences(path: &Path, g: &GridSpec) -> Result<FenceSet> {
    parse_fences(path, &read_to_string(path)?, g)
}

/// `fence_id,cell_index`, `fence_id,col,row` or
/// `fence_id,col_min,row_min,col_max,row_max`. Rows sharing an id are
/// joined into one fence; fences keep the order of first appearance.
pub fn parse_fences(path: &Path, text: &str, g: &GridSpec) -> Result<FenceSet> {
    let (header, rows) = records(path, text)?;
    let forms = "`fence_id,cell_index`, `fence_id,col,row` or `fence_id,col_min,row_min,col_max,row_max`";
    if header.first().map(String::as_str) != Some("fence_id") {
        return Err(GeoError::parse(path, 1, format!("expected header {forms}")));
    }
    let shape = shape(path, text, &header[1..], forms)?;
    let mut ids: Vec<String> = Vec::new();
    let mut fences: Vec<Vec<CellId>> = Vec::new();
    for (line, r) in rows {
        check_width(path, line, &r, header.len())?;
        let id = r[0].to_string();
        let cells = match shape {
            Shape::Index => vec![cell_field(path, line, &r, 1, false, g)?],
            Shape::ColRow => vec![cell_field(path, line, &r, 1, true, g)?],
            Shape::Rect => rect(path, line, &r, 1, g)?,
        };
        match ids.iter().position(|i| *i == id) {
            Some(k) => fences[k].extend(cells),
            None => {
                ids.push(id);
                fences.push(cells);
            }
        }
    }
    FenceSet::new(fences).map_err(|e| GeoError::parse(path, 0, e.to_string()))
}

pub fn read_region(path: &Path, g: &GridSpec) -> Result<Vec<CellId>> {
    parse_region(path, &read_to_string(path)?, g)
}

/// `cell_index`, `col,row` or `col_min,row_min,col_max,row_max` rows;
/// the region is their union, sorted.
pub fn parse_region(path: &Path, text: &str, g: &GridSpec) -> Result<Vec<CellId>> {
    let (header, rows) = records(path, text)?;
    let shape = shape(path, text, &header, "`cell_index`, `col,row` or `col_min,row_min,col_max,row_max`")?;
    let mut out = Vec::new();
    for (line, r) in rows {
        check_width(path, line, &r, header.len())?;
        match shape {
            Shape::Index => out.push(cell_field(path, line, &r, 0, false, g)?),
            Shape::ColRow => out.push(cell_field(path, line, &r, 0, true, g)?),
            Shape::Rect => out.extend(rect(path, line, &r, 0, g)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
