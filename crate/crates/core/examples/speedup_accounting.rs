//! Speedup of each preset under several cost models, and the attention
//! share that reproduces the reported preset speedups.

use jit_core::cost::{
    calibrate_attention_share, schedule_cost, CostModel, DEFAULT_BASELINE_STEPS, REPORTED_SPEEDUPS,
};
use jit_core::schedule::{preset, PRESET_NAMES};

fn main() -> jit_core::Result<()> {
    let n = 4096;
    let models = [
        ("quadratic", CostModel::pure_quadratic()),
        ("linear", CostModel::pure_linear()),
        ("alpha=0.05", CostModel::normalized(0.05, n)),
    ];
    print!("{:<10}", "preset");
    for (label, _) in &models {
        print!(" {label:>11}");
    }
    println!();
    for name in PRESET_NAMES {
        let s = preset(name, false)?;
        print!("{name:<10}");
        for (_, m) in &models {
            print!(
                " {:>10.3}x",
                schedule_cost(&s, n, m, DEFAULT_BASELINE_STEPS)?.speedup
            );
        }
        println!();
    }

    let targets = REPORTED_SPEEDUPS
        .iter()
        .map(|(name, x)| Ok((preset(name, false)?, *x)))
        .collect::<jit_core::Result<Vec<_>>>()?;
    let cal = calibrate_attention_share(&targets, n, DEFAULT_BASELINE_STEPS)?;
    println!("\nfitted attention share {:.4}", cal.attention_share);
    for ((p, t), e) in cal
        .predicted
        .iter()
        .zip(&cal.targets)
        .zip(&cal.relative_errors)
    {
        println!("  predicted {p:.3}x vs {t:.2}x ({:+.2}%)", 100.0 * e);
    }
    Ok(())
}
