use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{GeoError, Result};

/// Writes `path` through a temporary file in the same directory, renamed
/// into place once `fill` succeeds. A failed write leaves `path` untouched.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| GeoError::io(dir, e))?;
    let tmp = NamedTempFile::new_in(dir).map_err(|e| GeoError::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).and_then(|_| w.flush()).map_err(|e| GeoError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| GeoError::io(path, e))?;
    tmp.persist(path).map_err(|e| GeoError::io(path, e.error))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| GeoError::io(path, e))
}
