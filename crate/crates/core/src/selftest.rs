//! Fast built-in invariant checks, run by `jit selftest`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::{JitError, Result};
use crate::grid::{apply_mask, embed, gather, validate_chain, GridShape, IndexSet};
use crate::interp::Lifter;
use crate::io::jitg::{decode_grid, encode_grid};
use crate::sampler::{initial_noise, run, RunOptions};
use crate::schedule::{beta_timesteps, preset, PRESET_NAMES};
use crate::toy::{make_target_image, GaussianFlowField, TargetImage};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(JitError::Numerical(msg()))
    }
}

fn random_set(n: usize, m: usize, rng: &mut SplitMix64) -> Result<IndexSet> {
    IndexSet::from_unsorted(n, sample(rng, n, m).into_vec())
}

fn projectors() -> Result<()> {
    let shape = GridShape::new(9, 7, 3)?;
    let n = shape.tokens();
    let y = initial_noise(shape, 11);
    let mut rng = SplitMix64::seed_from_u64(5);
    for m in [1, 10, 40, n] {
        let set = random_set(n, m, &mut rng)?;
        let block = gather(&y, &set)?;
        ensure(gather(&embed(&block, &set, shape)?, &set)? == block, || {
            format!("gather after embed is not the identity (m = {m})")
        })?;
        let masked = apply_mask(&y, &set)?;
        ensure(apply_mask(&masked, &set)? == masked, || {
            format!("mask is not idempotent (m = {m})")
        })?;
    }
    Ok(())
}

fn lifter_anchors() -> Result<()> {
    let shape = GridShape::new(16, 16, 4)?;
    let n = shape.tokens();
    let y = initial_noise(shape, 3);
    let mut rng = SplitMix64::seed_from_u64(9);
    for m in [1, 17, 90, 255, n] {
        let set = random_set(n, m, &mut rng)?;
        let block = gather(&y, &set)?;
        let lifted = Lifter::new(&set, shape)?.lift(&block)?;
        ensure(gather(&lifted, &set)? == block, || {
            format!("lift does not reproduce anchors (m = {m})")
        })?;
    }
    Ok(())
}

fn timesteps() -> Result<()> {
    for invert in [false, true] {
        let t = beta_timesteps(18, 1.4, 0.42, invert)?;
        ensure(t[0] == 0.0 && t[18] == 1.0, || {
            "endpoints are not 0 and 1".into()
        })?;
        ensure(t.windows(2).all(|p| p[0] < p[1]), || {
            "timesteps are not strictly increasing".into()
        })?;
    }
    Ok(())
}

fn presets() -> Result<()> {
    for name in PRESET_NAMES {
        let s = preset(name, false)?;
        let budgets = s.budgets(1024)?;
        ensure(budgets.last() == Some(&1024), || {
            format!("{name}: last stage not dense")
        })?;
        ensure(s.timesteps.len() == s.nfe() + 1, || {
            format!("{name}: timestep count")
        })?;
    }
    Ok(())
}

fn grid_format() -> Result<()> {
    let g = initial_noise(GridShape::new(5, 3, 2)?, 1);
    ensure(decode_grid(&encode_grid(&g))? == g, || {
        "JITG round trip changed data".into()
    })
}

fn deterministic_run() -> Result<()> {
    let shape = GridShape::new(12, 12, 2)?;
    let mu = make_target_image(TargetImage::GaussianBump { width: 2.0 }, shape)?;
    let field = GaussianFlowField::with_uniform_sigma(mu, 0.1)?;
    let sched = preset("jit4x", false)?;
    let a = run(&sched, &field, shape, 21, &RunOptions::default())?;
    let b = run(&sched, &field, shape, 21, &RunOptions::default())?;
    ensure(a.endpoint == b.endpoint, || {
        "same seed gave different endpoints".into()
    })?;
    ensure(a.endpoint.is_finite(), || "endpoint is not finite".into())?;
    validate_chain(&a.anchor_chain)
}

type Check = fn() -> Result<()>;

/// Runs every check; never panics.
pub fn run_all() -> Vec<CheckOutcome> {
    let checks: [(&'static str, Check); 6] = [
        ("projector algebra", projectors),
        ("lifter keeps anchors", lifter_anchors),
        ("beta timesteps", timesteps),
        ("preset budgets", presets),
        ("grid file round trip", grid_format),
        ("deterministic sampling", deterministic_run),
    ];
    checks
        .iter()
        .map(|(name, check)| match check() {
            Ok(()) => CheckOutcome {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}
