//! Runs the dense 50-step baseline and both accelerated presets on the same
//! toy target and compares endpoints against a fine reference solve.
//!
//! With `sigma1 > 0` the target is a distribution, and tokens activated at
//! a stage switch are re-noised with a fresh draw. The sparse presets then
//! land on a different sample than the dense reference, so their distance
//! to it is of the order of the per-token spread rather than solver error.
//! Set `sigma1` to 0 to see all schedules agree to rounding.
//!
//! cargo run --release --example vanilla_vs_jit

use jit_core::grid::GridShape;
use jit_core::sampler::{run, RunOptions};
use jit_core::schedule::preset;
use jit_core::toy::{
    make_target_image, reference_solve, relative_l2_error, GaussianFlowField, TargetImage,
};

fn main() -> jit_core::Result<()> {
    let shape = GridShape::new(32, 32, 4)?;
    let mu = make_target_image(TargetImage::GaussianBump { width: 5.0 }, shape)?;
    let field = GaussianFlowField::with_uniform_sigma(mu, 0.3)?;
    let seed = 2024;
    let reference = reference_solve(&field, shape, seed, 2000)?;

    println!(
        "{:<10} {:>4} {:>9} {:>12}",
        "schedule", "nfe", "speedup", "rel. L2"
    );
    for name in ["vanilla50", "vanilla12", "jit4x", "jit7x"] {
        let report = run(
            &preset(name, false)?,
            &field,
            shape,
            seed,
            &RunOptions::default(),
        )?;
        let err = relative_l2_error(&report.endpoint, &reference)?;
        println!(
            "{:<10} {:>4} {:>8.3}x {:>12.3e}",
            name, report.nfe, report.speedup_vs_baseline, err
        );
    }
    Ok(())
}
