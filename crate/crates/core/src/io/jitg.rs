//! JITG binary grid format.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "JITG"
//! 4       4           version (u32 LE) = 1
//! 8       4           h (u32 LE)
//! 12      4           w (u32 LE)
//! 16      4           d (u32 LE)
//! 20      4*h*w*d     values (f32 LE), token-major then channel
//! ```

use std::path::Path;

use crate::error::{JitError, Result};
use crate::grid::{GridShape, TokenGrid};

pub const MAGIC: &[u8; 4] = b"JITG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

pub fn encode_grid(grid: &TokenGrid) -> Vec<u8> {
    let shape = grid.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * shape.len());
    out.extend_from_slice(MAGIC);
    for v in [VERSION, shape.h as u32, shape.w as u32, shape.d as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let chunk = bytes
        .get(offset..offset + 4)
        .ok_or_else(|| JitError::Format {
            offset: bytes.len(),
            message: format!("header truncated, expected {HEADER_LEN} bytes"),
        })?;
    Ok(u32::from_le_bytes(chunk.try_into().expect("4-byte slice")))
}

pub fn decode_grid(bytes: &[u8]) -> Result<TokenGrid> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(JitError::Format {
            offset: 0,
            message: "missing JITG magic".into(),
        });
    }
    let version = read_u32(bytes, 4)?;
    if version != VERSION {
        return Err(JitError::Format {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let h = read_u32(bytes, 8)? as usize;
    let w = read_u32(bytes, 12)? as usize;
    let d = read_u32(bytes, 16)? as usize;
    let shape = GridShape::new(h, w, d).map_err(|_| JitError::Format {
        offset: 8,
        message: format!("zero dimension in {h}x{w}x{d}"),
    })?;
    let expected = shape
        .len()
        .checked_mul(4)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| JitError::Format {
            offset: 8,
            message: "dimensions overflow".into(),
        })?;
    if bytes.len() < expected {
        return Err(JitError::Format {
            offset: bytes.len(),
            message: format!("data truncated, expected {expected} bytes"),
        });
    }
    if bytes.len() > expected {
        return Err(JitError::Format {
            offset: expected,
            message: format!("{} trailing bytes", bytes.len() - expected),
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    TokenGrid::from_vec(shape, data)
}

pub fn write_grid(path: &Path, grid: &TokenGrid) -> Result<()> {
    super::write_atomic(path, &encode_grid(grid))
}

pub fn read_grid(path: &Path) -> Result<TokenGrid> {
    decode_grid(&std::fs::read(path)?)
}
