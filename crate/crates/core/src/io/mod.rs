//! File formats: JITG grids, PGM heatmaps, JSON configs and reports, CSV
//! metrics and replay fixtures. Every writer is byte-deterministic and
//! replaces its target atomically.

pub mod config;
pub mod fixtures;
pub mod jitg;
pub mod pgm;
pub mod report;

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
