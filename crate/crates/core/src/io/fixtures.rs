//! On-disk replay fixtures.
//!
//! A fixture directory holds `manifest.json` and one JITG file per recorded
//! evaluation, stored as a `1 x m x d` grid. The manifest keeps the active
//! indices and the exact bit pattern of `t` for each entry.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::jitg::{read_grid, write_grid};
use crate::error::{JitError, Result};
use crate::grid::{ActiveBlock, GridShape, IndexSet, TokenGrid};
use crate::toy::ReplayField;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub file: String,
    pub indices: Vec<usize>,
    /// Informational; lookup uses `t_bits`.
    pub t: f64,
    pub t_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub n_total: usize,
    pub d: usize,
    pub entries: Vec<FixtureEntry>,
}

pub fn save_replay(dir: &Path, replay: &ReplayField) -> Result<FixtureManifest> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(replay.len());
    let mut d = 0;
    for (i, ((indices, t_bits), block)) in replay.entries().enumerate() {
        d = block.d();
        let file = format!("eval_{i:05}.jitg");
        let grid = TokenGrid::from_vec(
            GridShape::new(1, block.m(), block.d())?,
            block.values().to_vec(),
        )?;
        write_grid(&dir.join(&file), &grid)?;
        entries.push(FixtureEntry {
            file,
            indices: indices.clone(),
            t: f64::from_bits(*t_bits),
            t_bits: *t_bits,
        });
    }
    let manifest = FixtureManifest {
        n_total: replay.n_total(),
        d,
        entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    super::write_atomic(&dir.join(MANIFEST), text.as_bytes())?;
    Ok(manifest)
}

pub fn load_replay(dir: &Path, strict: bool) -> Result<ReplayField> {
    let text = std::fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: FixtureManifest = serde_json::from_str(&text)?;
    let mut replay = ReplayField::new(manifest.n_total, strict);
    for entry in &manifest.entries {
        let grid = read_grid(&dir.join(&entry.file))?;
        let shape = grid.shape();
        if shape.h != 1 || shape.w != entry.indices.len() || shape.d != manifest.d {
            return Err(JitError::Dimension(format!(
                "fixture {} has shape {}x{}x{}, expected 1x{}x{}",
                entry.file,
                shape.h,
                shape.w,
                shape.d,
                entry.indices.len(),
                manifest.d
            )));
        }
        let set = IndexSet::new(manifest.n_total, entry.indices.clone())?;
        let block = ActiveBlock::new(shape.d, grid.into_vec())?;
        replay.insert(&set, f64::from_bits(entry.t_bits), block)?;
    }
    Ok(replay)
}
