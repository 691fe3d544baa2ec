//! Sparse-to-dense interpolation used both to extrapolate anchor velocities
//! to inactive tokens and to spread the clean-latent prediction at stage
//! transitions.
//!
//! The operator is nearest-anchor fill followed by a Gaussian blur whose
//! width tracks the mean anchor spacing, then anchors are written back
//! unchanged so the anchor subspace is reproduced exactly.

use serde::{Deserialize, Serialize};

use crate::error::{JitError, Result};
use crate::grid::{ActiveBlock, GridShape, IndexSet, TokenGrid};

/// Blur width in token units and the odd kernel length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurSpec {
    pub sigma: f64,
    pub kernel_size: usize,
}

impl BlurSpec {
    pub fn new(sigma: f64, kernel_size: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(JitError::Parameter(format!(
                "blur sigma must be > 0, got {sigma}"
            )));
        }
        if kernel_size < 3 || kernel_size.is_multiple_of(2) {
            return Err(JitError::Parameter(format!(
                "kernel size must be odd and >= 3, got {kernel_size}"
            )));
        }
        Ok(Self { sigma, kernel_size })
    }

    /// Normalised 1-D taps sampled at integer offsets `-r..=r`.
    pub fn kernel(&self) -> Vec<f64> {
        let r = (self.kernel_size / 2) as i64;
        let denom = 2.0 * self.sigma * self.sigma;
        let mut taps: Vec<f64> = (-r..=r)
            .map(|o| (-((o * o) as f64) / denom).exp())
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        taps
    }
}

/// Blur scale for `m` anchors among `n` tokens.
///
/// Mean anchor gap `L = (m/n)^(-1/2)`, `sigma = 0.4 L`, and the kernel is
/// `max(3, 2 floor(1.5 sigma) + 1)` taps so it stays odd and spans ~3 sigma.
pub fn blur_params(m: usize, n: usize) -> Result<BlurSpec> {
    if m == 0 {
        return Err(JitError::EmptyAnchors);
    }
    if m > n {
        return Err(JitError::Parameter(format!(
            "{m} active tokens exceed the {n} available"
        )));
    }
    let density = m as f64 / n as f64;
    let gap = density.powf(-0.5);
    let sigma = 0.4 * gap;
    let kernel_size = (2 * (1.5 * sigma).floor() as usize + 1).max(3);
    BlurSpec::new(sigma, kernel_size)
}

/// For every token, the position in `set` of its nearest anchor.
///
/// Distance is Euclidean in (row, col); ties go to the anchor with the
/// lower token index.
fn nearest_sources(set: &IndexSet, shape: GridShape) -> Vec<usize> {
    let anchors: Vec<(i64, i64)> = set
        .indices()
        .iter()
        .map(|&i| {
            let (r, c) = shape.coords(i);
            (r as i64, c as i64)
        })
        .collect();
    (0..shape.tokens())
        .map(|i| {
            let (r, c) = shape.coords(i);
            let (r, c) = (r as i64, c as i64);
            let mut best = 0usize;
            let mut best_d2 = i64::MAX;
            for (j, &(ar, ac)) in anchors.iter().enumerate() {
                let d2 = (ar - r).pow(2) + (ac - c).pow(2);
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = j;
                    if d2 == 0 {
                        break;
                    }
                }
            }
            best
        })
        .collect()
}

fn check_lift_inputs(block: &ActiveBlock, set: &IndexSet, shape: GridShape) -> Result<()> {
    if set.is_empty() {
        return Err(JitError::EmptyAnchors);
    }
    if set.n_total() != shape.tokens() {
        return Err(JitError::Dimension(format!(
            "index set covers {} tokens but grid has {}",
            set.n_total(),
            shape.tokens()
        )));
    }
    block.check_matches(set, shape.d)
}

/// Every token takes the value of its nearest anchor.
pub fn nearest_fill(block: &ActiveBlock, set: &IndexSet, shape: GridShape) -> Result<TokenGrid> {
    check_lift_inputs(block, set, shape)?;
    let sources = nearest_sources(set, shape);
    Ok(fill_from_sources(block, &sources, shape))
}

fn fill_from_sources(block: &ActiveBlock, sources: &[usize], shape: GridShape) -> TokenGrid {
    let mut out = TokenGrid::zeros(shape);
    for (i, &j) in sources.iter().enumerate() {
        out.token_mut(i).copy_from_slice(block.row(j));
    }
    out
}

/// Separable per-channel Gaussian blur with edge-replicate padding.
/// Accumulates in f64.
pub fn gaussian_blur(grid: &TokenGrid, spec: &BlurSpec) -> TokenGrid {
    let shape = grid.shape();
    let (h, w, d) = (shape.h, shape.w, shape.d);
    let taps = spec.kernel();
    let r = (taps.len() / 2) as i64;
    let src = grid.data();

    // Horizontal pass into f64 scratch, vertical pass into the output.
    let mut horiz = vec![0.0f64; shape.len()];
    for row in 0..h {
        for col in 0..w {
            for c in 0..d {
                let mut acc = 0.0f64;
                for (k, tap) in taps.iter().enumerate() {
                    let cc = (col as i64 + k as i64 - r).clamp(0, w as i64 - 1) as usize;
                    acc += tap * src[(row * w + cc) * d + c] as f64;
                }
                horiz[(row * w + col) * d + c] = acc;
            }
        }
    }
    let mut out = TokenGrid::zeros(shape);
    let dst = out.data_mut();
    for row in 0..h {
        for col in 0..w {
            for c in 0..d {
                let mut acc = 0.0f64;
                for (k, tap) in taps.iter().enumerate() {
                    let rr = (row as i64 + k as i64 - r).clamp(0, h as i64 - 1) as usize;
                    acc += tap * horiz[(rr * w + col) * d + c];
                }
                dst[(row * w + col) * d + c] = acc as f32;
            }
        }
    }
    out
}

/// Interpolation operator for a fixed anchor set.
///
/// Nearest-anchor assignments and the blur spec only depend on the set, so
/// a sampler stage builds one `Lifter` and reuses it every step.
#[derive(Debug, Clone)]
pub struct Lifter {
    set: IndexSet,
    shape: GridShape,
    sources: Vec<usize>,
    anchor_mask: Vec<bool>,
    blur: Option<BlurSpec>,
}

impl Lifter {
    pub fn new(set: &IndexSet, shape: GridShape) -> Result<Self> {
        if set.is_empty() {
            return Err(JitError::EmptyAnchors);
        }
        if set.n_total() != shape.tokens() {
            return Err(JitError::Dimension(format!(
                "index set covers {} tokens but grid has {}",
                set.n_total(),
                shape.tokens()
            )));
        }
        // A full set needs neither nearest search nor blur.
        let (sources, blur) = if set.is_full() {
            ((0..shape.tokens()).collect(), None)
        } else {
            (
                nearest_sources(set, shape),
                Some(blur_params(set.len(), shape.tokens())?),
            )
        };
        Ok(Self {
            anchor_mask: set.mask(),
            set: set.clone(),
            shape,
            sources,
            blur,
        })
    }

    pub fn set(&self) -> &IndexSet {
        &self.set
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn blur(&self) -> Option<BlurSpec> {
        self.blur
    }

    /// Dense grid whose anchor tokens equal `block` bit for bit.
    pub fn lift(&self, block: &ActiveBlock) -> Result<TokenGrid> {
        block.check_matches(&self.set, self.shape.d)?;
        let nn = fill_from_sources(block, &self.sources, self.shape);
        let Some(spec) = self.blur else {
            return Ok(nn);
        };
        let mut out = gaussian_blur(&nn, &spec);
        for (j, &i) in self.set.indices().iter().enumerate() {
            debug_assert!(self.anchor_mask[i]);
            out.token_mut(i).copy_from_slice(block.row(j));
        }
        Ok(out)
    }
}

/// One-shot [`Lifter::lift`].
pub fn lift(block: &ActiveBlock, set: &IndexSet, shape: GridShape) -> Result<TokenGrid> {
    check_lift_inputs(block, set, shape)?;
    Lifter::new(set, shape)?.lift(block)
}
