mod common;

use jit_core::grid::{GridShape, IndexSet, TokenGrid};
use jit_core::importance::{importance_map, top_tokens};

#[test]
fn variance_map_matches_window_enumeration() {
    let mut rng = common::rng(10);
    for trial in 0..100 {
        let shape = GridShape::new(16, 16, 4).unwrap();
        let data = common::random_values(&mut rng, shape.len(), 1.0 + trial as f32);
        let grid = TokenGrid::from_vec(shape, data.clone()).unwrap();
        for window in [3, 5] {
            let got = importance_map(&grid, window).unwrap();
            let want = common::importance(&data, 16, 16, 4, window);
            let scale = want.iter().copied().fold(1.0, f64::max);
            for (g, w) in got.scores.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-5 * scale, "{g} vs {w}");
                assert!(*g >= 0.0);
            }
        }
    }
}

#[test]
fn scores_scale_quadratically_and_ranking_is_stable() {
    let mut rng = common::rng(11);
    let shape = GridShape::new(12, 12, 2).unwrap();
    let data = common::random_values(&mut rng, shape.len(), 1.0);
    let base = importance_map(&TokenGrid::from_vec(shape, data.clone()).unwrap(), 3).unwrap();
    let all = IndexSet::full(144);
    for s in [0.25f32, 3.0, 40.0] {
        let scaled: Vec<f32> = data.iter().map(|x| x * s).collect();
        let map = importance_map(&TokenGrid::from_vec(shape, scaled).unwrap(), 3).unwrap();
        for (a, b) in map.scores.iter().zip(&base.scores) {
            let want = b * (s as f64).powi(2);
            assert!((a - want).abs() <= 1e-4 * want.max(1e-12));
        }
        assert_eq!(
            top_tokens(&map, &all, 20).unwrap(),
            top_tokens(&base, &all, 20).unwrap()
        );
    }
}

#[test]
fn top_tokens_matches_sort_oracle() {
    let mut rng = common::rng(12);
    for trial in 0..200 {
        let shape = GridShape::new(6, 7, 1).unwrap();
        // Coarse quantisation forces plenty of ties.
        let data: Vec<f32> = common::random_values(&mut rng, 42, 3.0)
            .into_iter()
            .map(|x| x.round())
            .collect();
        let map = importance_map(&TokenGrid::from_vec(shape, data).unwrap(), 3).unwrap();
        let m = 1 + trial % 42;
        let cands = common::random_subset(&mut rng, 42, m);
        let count = 1 + trial % m;
        let got = top_tokens(&map, &IndexSet::new(42, cands.clone()).unwrap(), count).unwrap();
        assert_eq!(
            got.indices(),
            &common::top_tokens(&map.scores, &cands, count)[..]
        );
    }
}
