use std::path::Path;

use elastic_core::mass::aggregate_quality;
use elastic_core::{GridSpec, QualityGrid};

use crate::atomic::read_to_string;
use crate::csvio::{cell_field, check_width, field, records};
use crate::error::{GeoError, Result};

pub const BUILDING_WEIGHT: f64 = 0.1;
pub const POI_WEIGHT: f64 = 1.0;

/// Category weights, by column name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Weights(pub Vec<(String, f64)>);

impl Weights {
    /// `name:weight` pairs separated by commas.
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once(':').ok_or_else(|| format!("expected `name:weight`, got `{part}`"))?;
            let w: f64 = v.trim().parse().map_err(|_| format!("bad weight `{v}` for `{k}`"))?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(format!("weight for `{k}` must be nonnegative, got {w}"));
            }
            out.push((k.trim().to_string(), w));
        }
        Ok(Weights(out))
    }

    /// The configured weight, else 0.1 for building columns and 1.0 for
    /// anything else.
    pub fn weight_of(&self, column: &str) -> f64 {
        if let Some((_, w)) = self.0.iter().find(|(k, _)| k == column) {
            return *w;
        }
        if column.to_ascii_lowercase().starts_with("building") {
            BUILDING_WEIGHT
        } else {
            POI_WEIGHT
        }
    }

    pub fn format(&self) -> String {
        self.0.iter().map(|(k, w)| format!("{k}:{w}")).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityLoad {
    pub quality: QualityGrid,
    /// Weights applied to count columns; empty when the file gave `q`.
    pub weights: Weights,
}

pub fn read_quality(path: &Path, grid: &GridSpec, weights: &Weights) -> Result<QualityLoad> {
    parse_quality(path, &read_to_string(path)?, grid, weights)
}

/// Reads `cell_index,q`, `col,row,q`, or per-category counts
/// (`cell_index,<cat>...` / `col,row,<cat>...`) combined with `weights`.
/// Cells not listed have quality 0; an empty file means all zeros.
pub fn parse_quality(path: &Path, text: &str, grid: &GridSpec, weights: &Weights) -> Result<QualityLoad> {
    let mut qg = QualityGrid::zeros(*grid);
    if text.lines().all(|l| l.trim().is_empty() || l.trim_start().starts_with('#')) {
        return Ok(QualityLoad { quality: qg, weights: Weights::default() });
    }
    let (header, rows) = records(path, text)?;
    let header_line = first_content_line(text);
    let by_col_row = match header.first().map(String::as_str) {
        Some("cell_index") => false,
        Some("col") if header.get(1).map(String::as_str) == Some("row") => true,
        _ => {
            return Err(GeoError::parse(
                path,
                header_line,
                format!("expected header `cell_index,q`, `col,row,q` or category counts, got `{}`", header.join(",")),
            ))
        }
    };
    let at = if by_col_row { 2 } else { 1 };
    let cats = &header[at..];
    if cats.is_empty() {
        return Err(GeoError::parse(path, header_line, "header names no quality column"));
    }
    if cats.iter().any(|c| c.is_empty()) {
        return Err(GeoError::parse(path, header_line, "empty column name in header"));
    }
    let direct = cats.len() == 1 && cats[0] == "q";
    let used = if direct {
        Weights::default()
    } else {
        Weights(cats.iter().map(|c| (c.clone(), weights.weight_of(c))).collect())
    };
    let w: Vec<f64> = used.0.iter().map(|(_, w)| *w).collect();

    let mut seen = vec![0u64; grid.len()];
    let mut counts = vec![0.0; cats.len()];
    for (line, r) in rows {
        check_width(path, line, &r, header.len())?;
        let cell = cell_field(path, line, &r, 0, by_col_row, grid)?;
        if seen[cell.index()] != 0 {
            return Err(GeoError::parse(path, line, format!("cell {} already given on line {}", cell.0, seen[cell.index()])));
        }
        seen[cell.index()] = line;
        for (k, slot) in counts.iter_mut().enumerate() {
            *slot = field(path, line, &r, at + k, &cats[k])?;
        }
        let q = if direct { counts[0] } else { aggregate_quality(&counts, &w).map_err(|e| GeoError::parse(path, line, e.to_string()))? };
        qg.set(cell, q).map_err(|e| GeoError::parse(path, line, e.to_string()))?;
    }
    Ok(QualityLoad { quality: qg, weights: used })
}

fn first_content_line(text: &str) -> u64 {
    text.lines()
        .position(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map_or(1, |i| i as u64 + 1)
}
