//! Scores tokens by local velocity variance and picks which ones to activate
//! next, writing the score map as a PGM heat map.
//!
//! cargo run --example importance_activation -- /tmp/importance.pgm

use jit_core::grid::{complement, GridShape, TokenGrid};
use jit_core::importance::{importance_map, top_tokens, DEFAULT_WINDOW};
use jit_core::io::pgm::write_pgm_map;
use jit_core::schedule::initial_selector;

fn main() -> jit_core::Result<()> {
    let shape = GridShape::new(16, 16, 2)?;
    // Velocity with a sharp edge down the middle and a flat background.
    let mut v = TokenGrid::zeros(shape);
    for i in 0..shape.tokens() {
        let (_, c) = shape.coords(i);
        let x = if c < 8 { -1.0 } else { 1.0 };
        v.token_mut(i).copy_from_slice(&[x, 0.5 * x]);
    }
    let map = importance_map(&v, DEFAULT_WINDOW)?;
    let anchors = initial_selector(16, 16, 90, 3)?;
    let candidates = complement(&anchors);
    let chosen = top_tokens(&map, &candidates, 30)?;

    for r in 0..shape.h {
        let line: String = (0..shape.w)
            .map(|c| {
                let i = r * shape.w + c;
                if anchors.contains(i) {
                    'o'
                } else if chosen.contains(i) {
                    '#'
                } else {
                    '.'
                }
            })
            .collect();
        println!("{line}");
    }
    println!("o anchors, # newly activated (they cluster on the edge)");

    if let Some(path) = std::env::args().nth(1) {
        write_pgm_map(path.as_ref(), &map)?;
        println!("wrote {path}");
    }
    Ok(())
}
