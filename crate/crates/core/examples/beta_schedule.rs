//! Prints the Beta-warped timesteps of the accelerated presets next to the
//! uniform grid, plus the mirrored warp.

use jit_core::schedule::{
    beta_timesteps, inv_reg_inc_beta, preset, reg_inc_beta, uniform_timesteps, JIT_ALPHA, JIT_BETA,
};

fn main() -> jit_core::Result<()> {
    let n = 18;
    let warped = beta_timesteps(n, JIT_ALPHA, JIT_BETA, false)?;
    let mirrored = beta_timesteps(n, JIT_ALPHA, JIT_BETA, true)?;
    let uniform = uniform_timesteps(n)?;
    println!("  i   uniform      beta    mirrored");
    for i in 0..=n {
        println!(
            "{i:>3} {:>9.5} {:>9.5} {:>11.5}",
            uniform[i], warped[i], mirrored[i]
        );
    }

    // The inverse is exact to solver tolerance.
    let s = 0.37;
    let x = inv_reg_inc_beta(s, JIT_ALPHA, JIT_BETA)?;
    println!(
        "\nI^-1({s}) = {x:.12}, I(x) = {:.12}",
        reg_inc_beta(x, JIT_ALPHA, JIT_BETA)?
    );

    for name in ["jit4x", "jit7x"] {
        let p = preset(name, false)?;
        println!(
            "{name}: stages {:?}, transitions at steps {:?}, budgets at 64x64 {:?}",
            p.stages
                .iter()
                .map(|s| (s.steps, s.sparsity))
                .collect::<Vec<_>>(),
            p.transition_steps,
            p.budgets(4096)?
        );
    }
    Ok(())
}
