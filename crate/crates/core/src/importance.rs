//! Local-variance importance of a velocity field and top-k token activation.

use serde::{Deserialize, Serialize};

use crate::error::{JitError, Result};
use crate::grid::{IndexSet, TokenGrid};

pub const DEFAULT_WINDOW: usize = 3;

/// One non-negative score per token, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMap {
    pub h: usize,
    pub w: usize,
    pub scores: Vec<f64>,
}

impl ImportanceMap {
    pub fn score(&self, index: usize) -> f64 {
        self.scores[index]
    }
}

/// Box mean over a `window x window` neighbourhood with edge replication,
/// computed as two 1-D passes.
fn box_mean(values: &[f64], h: usize, w: usize, window: usize) -> Vec<f64> {
    let r = (window / 2) as i64;
    let inv = 1.0 / window as f64;
    let mut horiz = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for o in -r..=r {
                let cc = (col as i64 + o).clamp(0, w as i64 - 1) as usize;
                acc += values[row * w + cc];
            }
            horiz[row * w + col] = acc * inv;
        }
    }
    let mut out = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for o in -r..=r {
                let rr = (row as i64 + o).clamp(0, h as i64 - 1) as usize;
                acc += horiz[rr * w + col];
            }
            out[row * w + col] = acc * inv;
        }
    }
    out
}

/// `E_W[u*u] - E_W[u]^2` per channel, averaged over channels.
pub fn importance_map(velocity: &TokenGrid, window: usize) -> Result<ImportanceMap> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(JitError::Parameter(format!(
            "importance window must be odd and >= 3, got {window}"
        )));
    }
    let shape = velocity.shape();
    let (h, w, d) = (shape.h, shape.w, shape.d);
    let n = shape.tokens();
    let mut scores = vec![0.0f64; n];
    let mut chan = vec![0.0f64; n];
    let mut chan_sq = vec![0.0f64; n];
    for c in 0..d {
        for i in 0..n {
            let v = velocity.data()[i * d + c] as f64;
            chan[i] = v;
            chan_sq[i] = v * v;
        }
        let mean = box_mean(&chan, h, w, window);
        let mean_sq = box_mean(&chan_sq, h, w, window);
        for i in 0..n {
            scores[i] += mean_sq[i] - mean[i] * mean[i];
        }
    }
    let inv_d = 1.0 / d as f64;
    for s in scores.iter_mut() {
        *s = (*s * inv_d).max(0.0);
    }
    Ok(ImportanceMap { h, w, scores })
}

/// The `count` highest-scoring candidates, ties to the lower index, sorted.
pub fn top_tokens(map: &ImportanceMap, candidates: &IndexSet, count: usize) -> Result<IndexSet> {
    if candidates.n_total() != map.scores.len() {
        return Err(JitError::Dimension(format!(
            "candidates cover {} tokens but the map has {}",
            candidates.n_total(),
            map.scores.len()
        )));
    }
    if count == 0 {
        return Err(JitError::Budget("activation count must be positive".into()));
    }
    if count > candidates.len() {
        return Err(JitError::Budget(format!(
            "requested {count} tokens from {} candidates",
            candidates.len()
        )));
    }
    let mut ranked: Vec<usize> = candidates.indices().to_vec();
    ranked.sort_by(|&a, &b| {
        map.scores[b]
            .total_cmp(&map.scores[a])
            .then_with(|| a.cmp(&b))
    });
    ranked.truncate(count);
    IndexSet::from_unsorted(candidates.n_total(), ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    #[test]
    fn constant_field_has_zero_importance() {
        let g = TokenGrid::filled(GridShape::new(4, 5, 3).unwrap(), 1.7);
        let m = importance_map(&g, 3).unwrap();
        assert!(m.scores.iter().all(|&s| s.abs() < 1e-12));
    }

    #[test]
    fn impulse_gives_uniform_eight() {
        let mut data = vec![0.0f32; 9];
        data[4] = 9.0;
        let g = TokenGrid::from_vec(GridShape::new(3, 3, 1).unwrap(), data).unwrap();
        let m = importance_map(&g, 3).unwrap();
        for s in &m.scores {
            assert!((s - 8.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn duplicated_channels_match_single() {
        let one: Vec<f32> = (0..12).map(|i| ((i * 7) % 5) as f32).collect();
        let two: Vec<f32> = one.iter().flat_map(|&v| [v, v]).collect();
        let a = importance_map(
            &TokenGrid::from_vec(GridShape::new(3, 4, 1).unwrap(), one).unwrap(),
            3,
        )
        .unwrap();
        let b = importance_map(
            &TokenGrid::from_vec(GridShape::new(3, 4, 2).unwrap(), two).unwrap(),
            3,
        )
        .unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn even_window_rejected() {
        let g = TokenGrid::zeros(GridShape::new(3, 3, 1).unwrap());
        assert!(matches!(importance_map(&g, 4), Err(JitError::Parameter(_))));
        assert!(importance_map(&g, 1).is_err());
    }

    #[test]
    fn top_tokens_examples() {
        let map = ImportanceMap {
            h: 1,
            w: 4,
            scores: vec![3.0, 1.0, 2.0, 9.0],
        };
        let all = IndexSet::full(4);
        assert_eq!(top_tokens(&map, &all, 2).unwrap().indices(), &[0, 3]);
        assert_eq!(top_tokens(&map, &all, 4).unwrap(), all);
        assert!(matches!(
            top_tokens(&map, &all, 5),
            Err(JitError::Budget(_))
        ));

        let flat = ImportanceMap {
            h: 1,
            w: 4,
            scores: vec![1.0; 4],
        };
        let cands = IndexSet::new(4, vec![1, 2, 3]).unwrap();
        assert_eq!(top_tokens(&flat, &cands, 2).unwrap().indices(), &[1, 2]);
    }
}
