//! CSV exports: edge lists, audit reports, mechanism matrices and rasters.

use std::io::Write;
use std::path::Path;

use elastic_core::metric::Violation;
use elastic_core::{GridSpec, MechanismMatrix, MetricGraph};

use crate::atomic::write_atomic;
use crate::error::Result;

fn header(w: &mut dyn Write, meta: &[String]) -> std::io::Result<()> {
    for m in meta {
        writeln!(w, "{m}")?;
    }
    Ok(())
}

/// `a,b,weight`, fence edges included.
pub fn write_edges(path: &Path, g: &MetricGraph, meta: &[String]) -> Result<()> {
    write_atomic(path, |w| {
        header(w, meta)?;
        writeln!(w, "a,b,weight")?;
        for e in g.edges() {
            writeln!(w, "{},{},{}", e.a.0, e.b.0, e.weight)?;
        }
        Ok(())
    })
}

/// `cell,level,required,achieved`
pub fn write_audit(path: &Path, violations: &[Violation], meta: &[String]) -> Result<()> {
    write_atomic(path, |w| {
        header(w, meta)?;
        writeln!(w, "cell,level,required,achieved")?;
        for v in violations {
            writeln!(w, "{},{},{},{}", v.cell.0, v.level, v.required, v.achieved)?;
        }
        Ok(())
    })
}

/// `secret_index,report_index,probability`, zero entries omitted.
pub fn write_matrix(path: &Path, k: &MechanismMatrix, meta: &[String]) -> Result<()> {
    write_atomic(path, |w| {
        header(w, meta)?;
        writeln!(w, "secret_index,report_index,probability")?;
        for (x, row) in k.rows() {
            for (z, &p) in k.reports().iter().zip(row) {
                if p != 0.0 {
                    writeln!(w, "{},{},{p}", x.0, z.0)?;
                }
            }
        }
        Ok(())
    })
}

/// `col,row,value` for every cell in row-major order; `None` is written
/// as an empty value.
pub fn write_raster(w: &mut dyn Write, grid: &GridSpec, values: &[Option<f64>], meta: &[String]) -> std::io::Result<()> {
    header(w, meta)?;
    writeln!(w, "col,row,value")?;
    for c in grid.cells() {
        let (col, row) = grid.col_row(c);
        match values[c.index()] {
            Some(v) => writeln!(w, "{col},{row},{v}")?,
            None => writeln!(w, "{col},{row},")?,
        }
    }
    Ok(())
}
