//! Lifts a sparse set of anchor values to the full grid and shows that the
//! anchors survive exactly while the rest is a smooth fill.

use jit_core::grid::{gather, GridShape};
use jit_core::interp::Lifter;
use jit_core::schedule::initial_selector;

fn main() -> jit_core::Result<()> {
    let shape = GridShape::new(12, 12, 1)?;
    let anchors = initial_selector(12, 12, 40, 1)?;
    // A ramp sampled only at the anchors.
    let values: Vec<f32> = anchors
        .indices()
        .iter()
        .map(|&i| {
            let (r, c) = shape.coords(i);
            (r + c) as f32 / 22.0
        })
        .collect();
    let block = jit_core::grid::ActiveBlock::new(1, values)?;

    let lifter = Lifter::new(&anchors, shape)?;
    println!(
        "{} anchors of {}, blur {:?}",
        anchors.len(),
        shape.tokens(),
        lifter.blur()
    );
    let full = lifter.lift(&block)?;
    for r in 0..shape.h {
        let row: Vec<String> = (0..shape.w)
            .map(|c| {
                let i = r * shape.w + c;
                let mark = if anchors.contains(i) { '*' } else { ' ' };
                format!("{:.2}{mark}", full.token(i)[0])
            })
            .collect();
        println!("{}", row.join(" "));
    }
    assert_eq!(gather(&full, &anchors)?, block);
    println!("anchor values reproduced bit for bit (* marks anchors)");
    Ok(())
}
