//! One stage transition by hand: clean-estimate target, noise blend on the
//! ring, and the straight hitting path that reaches the target at the switch
//! time.

use jit_core::grid::{gather, ring, GridShape, IndexSet};
use jit_core::sampler::initial_noise;
use jit_core::schedule::initial_selector;
use jit_core::transition::{dmf_target, hitting_flow, predict_clean};

fn main() -> jit_core::Result<()> {
    let shape = GridShape::new(8, 8, 1)?;
    let coarse = initial_selector(8, 8, 20, 0)?;
    let mut finer: Vec<usize> = coarse.indices().to_vec();
    finer.extend([9, 18, 27, 36]);
    let fine = IndexSet::from_unsorted(64, finer)?;
    let new_tokens = ring(&fine, &coarse)?;

    let t_prev = 0.6;
    let switch = 0.7;
    let y = initial_noise(shape, 1);
    let v = jit_core::grid::TokenGrid::filled(shape, 0.8);
    let y_hat = predict_clean(&y, t_prev, &v)?;
    let noise = initial_noise(shape, 99);
    let target = dmf_target(&y_hat, &coarse, &new_tokens, switch, &noise)?;

    println!("ring tokens {:?}", new_tokens.indices());
    let z0: Vec<f64> = gather(&y, &new_tokens)?
        .values()
        .iter()
        .map(|&x| x as f64)
        .collect();
    let goal: Vec<f64> = target.values().iter().map(|&x| x as f64).collect();
    let delta = 0.05;
    for t in [switch - delta, switch - delta / 2.0, switch] {
        let z = hitting_flow(&z0, &goal, switch, delta, t)?;
        println!(
            "t = {t:.3}: {:?}",
            z.iter().map(|x| format!("{x:+.4}")).collect::<Vec<_>>()
        );
    }
    println!("target      {:?}", target.values());
    Ok(())
}
