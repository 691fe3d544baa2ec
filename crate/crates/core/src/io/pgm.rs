//! Binary (P5) greyscale heatmaps, min-max normalised to 0..=255.

use std::path::Path;

use crate::error::{JitError, Result};
use crate::grid::TokenGrid;
use crate::importance::ImportanceMap;

/// P5 bytes for an `h x w` row-major field. A constant field maps to 128.
pub fn encode_pgm(h: usize, w: usize, values: &[f64]) -> Result<Vec<u8>> {
    if h == 0 || w == 0 || values.len() != h * w {
        return Err(JitError::Dimension(format!(
            "{} values for a {h}x{w} image",
            values.len()
        )));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    let span = hi - lo;
    out.extend(values.iter().map(|&v| {
        if !(span > 0.0) || !span.is_finite() {
            128
        } else {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        }
    }));
    Ok(out)
}

pub fn write_pgm_map(path: &Path, map: &ImportanceMap) -> Result<()> {
    super::write_atomic(path, &encode_pgm(map.h, map.w, &map.scores)?)
}

/// Writes one channel of a grid as a heatmap.
pub fn write_pgm_channel(path: &Path, grid: &TokenGrid, channel: usize) -> Result<()> {
    let shape = grid.shape();
    if channel >= shape.d {
        return Err(JitError::Parameter(format!(
            "channel {channel} out of range for {} channels",
            shape.d
        )));
    }
    let values: Vec<f64> = (0..shape.tokens())
        .map(|i| grid.token(i)[channel] as f64)
        .collect();
    super::write_atomic(path, &encode_pgm(shape.h, shape.w, &values)?)
}
