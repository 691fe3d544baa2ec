//! Plugging a user-defined velocity field into the sampler.

use jit_core::grid::{ActiveBlock, GridShape, IndexSet};
use jit_core::sampler::{run, RunOptions, VelocityField};
use jit_core::schedule::{build_schedule, StageSpec};

/// Rotates channel pairs, independent of position.
struct Swirl {
    rate: f32,
}

impl VelocityField for Swirl {
    fn evaluate(
        &self,
        active: &ActiveBlock,
        _indices: &IndexSet,
        _t: f64,
    ) -> jit_core::Result<ActiveBlock> {
        let mut out = ActiveBlock::zeros(active.m(), active.d());
        for j in 0..active.m() {
            let x = active.row(j);
            let o = out.row_mut(j);
            o[0] = -self.rate * x[1];
            o[1] = self.rate * x[0];
        }
        Ok(out)
    }

    fn descriptor(&self) -> String {
        format!("swirl(rate={})", self.rate)
    }
}

fn main() -> jit_core::Result<()> {
    let stages = [
        StageSpec {
            steps: 4,
            sparsity: 0.25,
        },
        StageSpec {
            steps: 4,
            sparsity: 0.5,
        },
        StageSpec {
            steps: 4,
            sparsity: 1.0,
        },
    ];
    let schedule = build_schedule("three-stage", &stages, 12, 1.0, 1.0, false)?;
    let shape = GridShape::new(16, 16, 2)?;
    let report = run(
        &schedule,
        &Swirl { rate: 1.5 },
        shape,
        5,
        &RunOptions::default(),
    )?;
    println!("field {}", report.field);
    for s in &report.steps {
        println!(
            "step {:>2} t={:.3} stage {} active {}",
            s.step, s.t, s.stage, s.active
        );
    }
    println!("endpoint {:?}", report.endpoint_stats);
    Ok(())
}
