//! Binary metric files.
//!
//! All integers and floats little-endian:
//!
//! ```text
//! "ELGM"  u16 version
//! f64 origin_lat  f64 origin_lon  f64 cell_size_m  u32 nx  u32 ny
//! f64 l_star  f64 l_top  f64 frame_fraction
//! u64 edge count, then per edge: u32 a  u32 b  f64 weight
//! u32 fence count, then per fence: u32 len, len × u32 cell
//! usable bitmap, ceil(nx·ny / 8) bytes, cell i at bit i % 8 of byte i / 8
//! nx·ny × f64 level
//! u32 length, UTF-8 metadata
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use elastic_core::metric::{BuildParams, Edge};
use elastic_core::{CellId, FenceSet, GeoCoord, GridSpec, MetricGraph, Requirement};

use crate::atomic::write_atomic;
use crate::error::{GeoError, Result};

pub const MAGIC: &[u8; 4] = b"ELGM";
pub const VERSION: u16 = 1;

/// A metric with the metadata text stored beside it.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricFile {
    pub graph: MetricGraph,
    pub meta: String,
}

pub fn encode(g: &MetricGraph, meta: &str) -> Vec<u8> {
    let grid = g.grid();
    let n = grid.len();
    let mut out = Vec::with_capacity(80 + 16 * g.edges().len() + 9 * n + meta.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let o = grid.origin();
    for v in [o.lat, o.lon, grid.cell_size()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&grid.nx().to_le_bytes());
    out.extend_from_slice(&grid.ny().to_le_bytes());
    let p = g.params();
    for v in [p.requirement.l_star(), p.l_top, p.frame_fraction] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(g.edges().len() as u64).to_le_bytes());
    for e in g.edges() {
        out.extend_from_slice(&e.a.0.to_le_bytes());
        out.extend_from_slice(&e.b.0.to_le_bytes());
        out.extend_from_slice(&e.weight.to_le_bytes());
    }
    out.extend_from_slice(&(g.fences().len() as u32).to_le_bytes());
    for f in g.fences().fences() {
        out.extend_from_slice(&(f.len() as u32).to_le_bytes());
        for c in f {
            out.extend_from_slice(&c.0.to_le_bytes());
        }
    }
    let mut bits = vec![0u8; n.div_ceil(8)];
    for (i, &u) in g.usable_mask().iter().enumerate() {
        if u {
            bits[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&bits);
    for &l in g.levels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    out
}

struct Reader<'a> {
    path: &'a Path,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, at: usize, msg: impl Into<String>) -> GeoError {
        GeoError::Codec { path: PathBuf::from(self.path), offset: at as u64, msg: msg.into() }
    }

    fn take(&mut self, k: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < k {
            return Err(self.err(self.pos, format!("truncated {what}: need {k} bytes, {} left", self.buf.len() - self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    /// Fails before allocating if `count` items of `size` bytes cannot fit.
    fn room(&self, count: u64, size: u64, what: &str) -> Result<usize> {
        let left = (self.buf.len() - self.pos) as u64;
        match count.checked_mul(size) {
            Some(b) if b <= left => Ok(count as usize),
            _ => Err(self.err(self.pos, format!("{what} count {count} exceeds the remaining {left} bytes"))),
        }
    }
}

pub fn decode(path: &Path, buf: &[u8]) -> Result<MetricFile> {
    let mut r = Reader { path, buf, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.err(0, "not a metric file (bad magic)"));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(r.err(4, format!("unsupported version {version}")));
    }

    let at = r.pos;
    let lat = r.f64("origin_lat")?;
    let lon = r.f64("origin_lon")?;
    let size = r.f64("cell_size")?;
    let nx = r.u32("nx")?;
    let ny = r.u32("ny")?;
    let grid = GeoCoord::new(lat, lon)
        .and_then(|o| GridSpec::new(o, size, nx, ny))
        .map_err(|e| r.err(at, e.to_string()))?;
    let n = grid.len();

    let at = r.pos;
    let l_star = r.f64("l_star")?;
    let l_top = r.f64("l_top")?;
    let frame = r.f64("frame_fraction")?;
    let params = Requirement::new(l_star)
        .and_then(|req| BuildParams::new(req, l_top, frame))
        .map_err(|e| r.err(at, e.to_string()))?;

    let count = r.u64("edge count")?;
    let count = r.room(count, 16, "edge")?;
    let mut edges = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos;
        let a = r.u32("edge")?;
        let b = r.u32("edge")?;
        let w = r.f64("edge weight")?;
        if a as usize >= n || b as usize >= n {
            return Err(r.err(at, format!("edge {a}-{b} leaves a grid of {n} cells")));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(r.err(at + 8, format!("edge {a}-{b} has invalid weight {w}")));
        }
        edges.push(Edge { a: CellId(a), b: CellId(b), weight: w });
    }

    let at = r.pos;
    let nf = r.u32("fence count")?;
    let nf = r.room(nf as u64, 4, "fence")?;
    let mut fences = Vec::with_capacity(nf);
    for _ in 0..nf {
        let len = r.u32("fence length")?;
        let len = r.room(len as u64, 4, "fence cell")?;
        let mut f = Vec::with_capacity(len);
        for _ in 0..len {
            let c_at = r.pos;
            let c = r.u32("fence cell")?;
            if c as usize >= n {
                return Err(r.err(c_at, format!("fence cell {c} leaves a grid of {n} cells")));
            }
            f.push(CellId(c));
        }
        fences.push(f);
    }
    let fences = FenceSet::new(fences).map_err(|e| r.err(at, e.to_string()))?;

    let bits = r.take(n.div_ceil(8), "usable bitmap")?;
    let usable: Vec<bool> = (0..n).map(|i| bits[i / 8] & (1 << (i % 8)) != 0).collect();
    let count = r.room(n as u64, 8, "level")?;
    let mut levels = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos;
        let l = r.f64("level")?;
        if !(l >= 0.0 && l.is_finite()) {
            return Err(r.err(at, format!("invalid level {l}")));
        }
        levels.push(l);
    }

    let len = r.u32("metadata length")?;
    let at = r.pos;
    let meta = r.take(len as usize, "metadata")?;
    let meta = String::from_utf8(meta.to_vec()).map_err(|_| r.err(at, "metadata is not UTF-8"))?;
    if r.pos != buf.len() {
        return Err(r.err(r.pos, format!("{} trailing bytes", buf.len() - r.pos)));
    }

    let graph = MetricGraph::from_parts(grid, params, edges, fences, usable, levels).map_err(|e| r.err(0, e.to_string()))?;
    Ok(MetricFile { graph, meta })
}

pub fn write_metric(path: &Path, g: &MetricGraph, meta: &str) -> Result<()> {
    let bytes = encode(g, meta);
    write_atomic(path, |w| w.write_all(&bytes))
}

pub fn read_metric(path: &Path) -> Result<MetricFile> {
    let buf = fs::read(path).map_err(|e| GeoError::io(path, e))?;
    decode(path, &buf)
}
