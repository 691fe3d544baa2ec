//! Records every field evaluation of a run, stores them as a fixture
//! directory, and replays the run from disk without the original field.

use jit_core::grid::GridShape;
use jit_core::io::fixtures::{load_replay, save_replay};
use jit_core::sampler::{run, RunOptions};
use jit_core::schedule::preset;
use jit_core::toy::{make_target_image, GaussianFlowField, RecordingField, TargetImage};

fn main() -> jit_core::Result<()> {
    let shape = GridShape::new(16, 16, 3)?;
    let mu = make_target_image(TargetImage::Checkerboard { cell: 4 }, shape)?;
    let field = GaussianFlowField::with_uniform_sigma(mu, 0.2)?;
    let schedule = preset("jit7x", false)?;
    let opts = RunOptions::default();

    let recorder = RecordingField::new(field, shape.tokens());
    let original = run(&schedule, &recorder, shape, 8, &opts)?;

    let dir = tempfile::tempdir()?;
    let manifest = save_replay(dir.path(), &recorder.into_replay(true))?;
    println!(
        "saved {} evaluations to {}",
        manifest.entries.len(),
        dir.path().display()
    );

    let replay = load_replay(dir.path(), true)?;
    let replayed = run(&schedule, &replay, shape, 8, &opts)?;
    assert_eq!(original.endpoint, replayed.endpoint);
    println!("replayed endpoint is bit-identical");
    Ok(())
}
