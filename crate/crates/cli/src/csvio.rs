//! Shared CSV plumbing: comment-tolerant readers with line-numbered errors.

use std::path::Path;

use elastic_core::{CellId, GridSpec};

use crate::error::{GeoError, Result};

pub fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

pub fn csv_err(path: &Path, e: csv::Error) -> GeoError {
    let line = e.position().map_or(0, |p| p.line());
    GeoError::parse(path, line, e.to_string())
}

/// Records with their 1-based line numbers; the header is consumed.
pub fn records(path: &Path, text: &str) -> Result<(Vec<String>, Vec<(u64, csv::StringRecord)>)> {
    let mut rdr = reader(text);
    let header: Vec<String> = rdr.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let mut out = Vec::new();
    for r in rdr.records() {
        let r = r.map_err(|e| csv_err(path, e))?;
        let line = r.position().map_or(0, |p| p.line());
        out.push((line, r));
    }
    Ok((header, out))
}

pub fn field<T: std::str::FromStr>(path: &Path, line: u64, r: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let s = r.get(i).ok_or_else(|| GeoError::parse(path, line, format!("missing field `{name}`")))?;
    s.parse().map_err(|_| GeoError::parse(path, line, format!("bad `{name}` value `{s}`")))
}

/// A cell given either as `cell_index` or as `col,row`, starting at field `at`.
pub fn cell_field(path: &Path, line: u64, r: &csv::StringRecord, at: usize, by_col_row: bool, g: &GridSpec) -> Result<CellId> {
    let cell = if by_col_row {
        let col: u32 = field(path, line, r, at, "col")?;
        let row: u32 = field(path, line, r, at + 1, "row")?;
        g.cell(col, row)
            .ok_or_else(|| GeoError::parse(path, line, format!("cell ({col}, {row}) outside the {}x{} grid", g.nx(), g.ny())))?
    } else {
        CellId(field(path, line, r, at, "cell_index")?)
    };
    if !g.contains(cell) {
        return Err(GeoError::parse(path, line, format!("cell {} outside a grid of {} cells", cell.0, g.len())));
    }
    Ok(cell)
}

pub fn check_width(path: &Path, line: u64, r: &csv::StringRecord, width: usize) -> Result<()> {
    if r.len() != width {
        return Err(GeoError::parse(path, line, format!("expected {width} fields, found {}", r.len())));
    }
    Ok(())
}
