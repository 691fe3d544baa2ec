use jit_core::grid::{
    apply_mask, complement, embed, gather, ring, validate_chain, GridShape, IndexSet, TokenGrid,
};
use proptest::prelude::*;

/// A nested chain coarse to fine ending in the full set, plus grid data.
fn chain_and_grid() -> impl Strategy<Value = (GridShape, Vec<IndexSet>, Vec<f32>)> {
    (1usize..9, 1usize..9, 1usize..4, 1usize..5)
        .prop_flat_map(|(h, w, d, levels)| {
            let n = h * w;
            (
                Just(GridShape::new(h, w, d).unwrap()),
                Just(levels),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
                prop::collection::vec(-10.0f32..10.0, n * d),
            )
        })
        .prop_map(|(shape, levels, order, data)| {
            let n = order.len();
            // Strictly growing prefix sizes of a random order.
            let mut sizes: Vec<usize> =
                (1..=levels).map(|l| (l * n).div_ceil(levels + 1)).collect();
            sizes.push(n);
            sizes.dedup();
            sizes.retain(|&s| s > 0);
            let chain = sizes
                .iter()
                .map(|&s| IndexSet::from_unsorted(n, order[..s].to_vec()).unwrap())
                .collect();
            (shape, chain, data)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projector_algebra((shape, chain, data) in chain_and_grid()) {
        validate_chain(&chain).unwrap();
        let y = TokenGrid::from_vec(shape, data).unwrap();
        for set in &chain {
            let block = gather(&y, set).unwrap();
            let masked = apply_mask(&y, set).unwrap();
            prop_assert_eq!(&embed(&block, set, shape).unwrap(), &masked);
            prop_assert_eq!(&apply_mask(&masked, set).unwrap(), &masked);
            prop_assert_eq!(gather(&embed(&block, set, shape).unwrap(), set).unwrap(), block);
            let rest = complement(set);
            prop_assert_eq!(rest.len() + set.len(), shape.tokens());
        }
        let rings: Vec<IndexSet> = chain
            .windows(2)
            .map(|p| ring(&p[1], &p[0]).unwrap())
            .collect();
        // Rings are disjoint from their coarser set and from each other, and
        // together with the coarsest set they tile the grid.
        let mut seen = vec![false; shape.tokens()];
        for &i in chain[0].indices() {
            seen[i] = true;
        }
        for (r, coarse) in rings.iter().zip(&chain) {
            for &i in r.indices() {
                prop_assert!(!coarse.contains(i));
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn ring_rejects_non_nested(n in 2usize..40, a in 0usize..40) {
        let a = a % n;
        let full = IndexSet::full(n);
        prop_assert!(ring(&full, &full).is_err());
        let single = IndexSet::new(n, vec![a]).unwrap();
        prop_assert!(ring(&single, &full).is_err());
    }
}
