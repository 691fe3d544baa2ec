//! Token grids, active-index sets and the selector/projector operations.
//!
//! Tokens are addressed in row-major order (`row * w + col`). The selector
//! `S` is realised as [`gather`] / [`embed`], the anchor projector `P` as
//! [`apply_mask`] and the support of the ring projector `Q` as [`ring`].

use serde::{Deserialize, Serialize};

use crate::error::{JitError, Result};

/// Token-grid dimensions: `h` rows by `w` columns of `d`-channel tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    pub h: usize,
    pub w: usize,
    pub d: usize,
}

impl GridShape {
    pub fn new(h: usize, w: usize, d: usize) -> Result<Self> {
        if h == 0 || w == 0 || d == 0 {
            return Err(JitError::Dimension(format!(
                "grid dimensions must be positive, got {h}x{w}x{d}"
            )));
        }
        if h.checked_mul(w).and_then(|n| n.checked_mul(d)).is_none() {
            return Err(JitError::Dimension(format!("grid {h}x{w}x{d} overflows")));
        }
        Ok(Self { h, w, d })
    }

    /// Number of tokens `N = h * w`.
    pub fn tokens(&self) -> usize {
        self.h * self.w
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (row, col) of a token index.
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.w, index % self.w)
    }
}

/// Full latent state: `h * w` tokens of `d` channels, token-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenGrid {
    shape: GridShape,
    data: Vec<f32>,
}

/// A single zero token.
impl Default for TokenGrid {
    fn default() -> Self {
        TokenGrid::zeros(GridShape { h: 1, w: 1, d: 1 })
    }
}

impl TokenGrid {
    pub fn zeros(shape: GridShape) -> Self {
        Self {
            data: vec![0.0; shape.len()],
            shape,
        }
    }

    pub fn filled(shape: GridShape, value: f32) -> Self {
        Self {
            data: vec![value; shape.len()],
            shape,
        }
    }

    pub fn from_vec(shape: GridShape, data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(JitError::Dimension(format!(
                "grid {}x{}x{} needs {} values, got {}",
                shape.h,
                shape.w,
                shape.d,
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn token(&self, index: usize) -> &[f32] {
        let d = self.shape.d;
        &self.data[index * d..(index + 1) * d]
    }

    pub fn token_mut(&mut self, index: usize) -> &mut [f32] {
        let d = self.shape.d;
        &mut self.data[index * d..(index + 1) * d]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same_shape(&self, other: &TokenGrid) -> Result<()> {
        if self.shape != other.shape {
            return Err(JitError::Dimension(format!(
                "grid shapes differ: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

/// Sorted, duplicate-free set of token indices in `[0, n_total)`.
///
/// Sets built through [`IndexSet::new`] are non-empty; an empty set only
/// arises from [`complement`] of a full set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet {
    n_total: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    /// Validates that `indices` is strictly increasing, in range and non-empty.
    pub fn new(n_total: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(JitError::EmptyAnchors);
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(JitError::Parameter(
                "index set must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= n_total {
                return Err(JitError::Dimension(format!(
                    "index {last} out of range for {n_total} tokens"
                )));
            }
        }
        Ok(Self { n_total, indices })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(n_total: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(n_total, indices)
    }

    pub fn full(n_total: usize) -> Self {
        Self {
            n_total,
            indices: (0..n_total).collect(),
        }
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.n_total
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Membership flags for every token.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_total];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.n_total == other.n_total && self.indices.iter().all(|&i| other.contains(i))
    }

    /// Union of two disjoint-or-overlapping sets over the same token count.
    pub fn union(&self, other: &IndexSet) -> Result<IndexSet> {
        if self.n_total != other.n_total {
            return Err(JitError::Dimension(format!(
                "token counts differ: {} vs {}",
                self.n_total, other.n_total
            )));
        }
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (
            self.indices.iter().peekable(),
            other.indices.iter().peekable(),
        );
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x < y {
                        merged.push(x);
                        a.next();
                    } else if y < x {
                        merged.push(y);
                        b.next();
                    } else {
                        merged.push(x);
                        a.next();
                        b.next();
                    }
                }
                (Some(&&x), None) => {
                    merged.push(x);
                    a.next();
                }
                (None, Some(&&y)) => {
                    merged.push(y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        Ok(IndexSet {
            n_total: self.n_total,
            indices: merged,
        })
    }

    fn check_grid(&self, shape: GridShape) -> Result<()> {
        if self.n_total != shape.tokens() {
            return Err(JitError::Dimension(format!(
                "index set covers {} tokens but grid has {}",
                self.n_total,
                shape.tokens()
            )));
        }
        Ok(())
    }
}

/// Values of the active tokens, one `d`-vector per index in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveBlock {
    d: usize,
    values: Vec<f32>,
}

impl ActiveBlock {
    pub fn new(d: usize, values: Vec<f32>) -> Result<Self> {
        if d == 0 || !values.len().is_multiple_of(d) {
            return Err(JitError::Dimension(format!(
                "{} values do not split into rows of {d}",
                values.len()
            )));
        }
        Ok(Self { d, values })
    }

    pub fn zeros(m: usize, d: usize) -> Self {
        Self {
            d,
            values: vec![0.0; m * d],
        }
    }

    /// Number of tokens `m`.
    pub fn m(&self) -> usize {
        self.values.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    pub fn row(&self, j: usize) -> &[f32] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f32] {
        let d = self.d;
        &mut self.values[j * d..(j + 1) * d]
    }

    pub(crate) fn check_matches(&self, set: &IndexSet, d: usize) -> Result<()> {
        if self.d != d || self.m() != set.len() {
            return Err(JitError::Dimension(format!(
                "block of {}x{} does not match {} indices with {d} channels",
                self.m(),
                self.d,
                set.len()
            )));
        }
        Ok(())
    }
}

/// `S^T y`: the active tokens of `grid`, in index order.
pub fn gather(grid: &TokenGrid, set: &IndexSet) -> Result<ActiveBlock> {
    set.check_grid(grid.shape())?;
    let d = grid.shape().d;
    let mut values = Vec::with_capacity(set.len() * d);
    for &i in set.indices() {
        values.extend_from_slice(grid.token(i));
    }
    Ok(ActiveBlock { d, values })
}

/// `S b`: scatter the block into a zero grid.
pub fn embed(block: &ActiveBlock, set: &IndexSet, shape: GridShape) -> Result<TokenGrid> {
    set.check_grid(shape)?;
    block.check_matches(set, shape.d)?;
    let mut grid = TokenGrid::zeros(shape);
    for (j, &i) in set.indices().iter().enumerate() {
        grid.token_mut(i).copy_from_slice(block.row(j));
    }
    Ok(grid)
}

/// `P y`: keep tokens in `set`, zero the rest.
pub fn apply_mask(grid: &TokenGrid, set: &IndexSet) -> Result<TokenGrid> {
    set.check_grid(grid.shape())?;
    let mut out = TokenGrid::zeros(grid.shape());
    for &i in set.indices() {
        out.token_mut(i).copy_from_slice(grid.token(i));
    }
    Ok(out)
}

/// `R = prev \ cur`, the tokens a transition from `cur` to `prev` activates.
pub fn ring(prev: &IndexSet, cur: &IndexSet) -> Result<IndexSet> {
    if prev.n_total != cur.n_total {
        return Err(JitError::Dimension(format!(
            "token counts differ: {} vs {}",
            prev.n_total, cur.n_total
        )));
    }
    if !cur.is_subset_of(prev) {
        return Err(JitError::Nesting(
            "current set is not contained in the previous set".into(),
        ));
    }
    if cur.len() == prev.len() {
        return Err(JitError::Nesting("inclusion is not strict".into()));
    }
    let indices = prev
        .indices
        .iter()
        .copied()
        .filter(|&i| !cur.contains(i))
        .collect();
    Ok(IndexSet {
        n_total: prev.n_total,
        indices,
    })
}

/// Indices not in `set`; empty when `set` is full.
pub fn complement(set: &IndexSet) -> IndexSet {
    let mask = set.mask();
    IndexSet {
        n_total: set.n_total,
        indices: (0..set.n_total).filter(|&i| !mask[i]).collect(),
    }
}

/// Checks `chain[0] ⊂ chain[1] ⊂ ... ⊂ chain[last] = {0..N-1}`, strict at
/// every link. The chain is ordered coarse to fine.
pub fn validate_chain(chain: &[IndexSet]) -> Result<()> {
    let Some(finest) = chain.last() else {
        return Err(JitError::Nesting("empty chain".into()));
    };
    for (k, pair) in chain.windows(2).enumerate() {
        let (inner, outer) = (&pair[0], &pair[1]);
        if !inner.is_subset_of(outer) {
            return Err(JitError::Nesting(format!(
                "link {k}: set {k} is not contained in set {}",
                k + 1
            )));
        }
        if inner.len() == outer.len() {
            return Err(JitError::Nesting(format!(
                "link {k}: inclusion of set {k} in set {} is not strict",
                k + 1
            )));
        }
    }
    if !finest.is_full() {
        return Err(JitError::Nesting(format!(
            "finest set has {} of {} tokens",
            finest.len(),
            finest.n_total
        )));
    }
    Ok(())
}
