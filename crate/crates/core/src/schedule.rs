//! Stage schedules, Beta-warped timesteps and the initial anchor set.
//!
//! A schedule is a list of stages ordered coarse to fine. Each stage runs a
//! fixed number of Euler steps at a fixed token sparsity; the last stage is
//! always dense. Stage switches are keyed by solver-step index, so the
//! switch time `T_k` is simply the timestep at that index.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{JitError, Result};
use crate::grid::IndexSet;
use crate::rng::{NoiseStream, StreamKind};

/// Beta warp used by the accelerated presets.
pub const JIT_ALPHA: f64 = 1.4;
pub const JIT_BETA: f64 = 0.42;

pub const PRESET_NAMES: [&str; 5] = ["jit4x", "jit7x", "vanilla50", "vanilla12", "vanilla7"];

const INVERSE_MAX_ITER: usize = 300;

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_beta_params(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(JitError::Parameter(format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    statrs::function::beta::checked_beta_reg(a, b, x)
        .map_err(|e| JitError::Numerical(format!("incomplete beta: {e}")))
}

fn check_beta_params(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(JitError::Parameter(format!(
            "Beta parameters must be positive and finite, got ({a}, {b})"
        )));
    }
    Ok(())
}

/// Solves `I_x(a, b) = s` for `x`.
///
/// Newton steps on the Beta density inside a shrinking bracket; a step that
/// leaves the bracket is replaced by bisection.
pub fn inv_reg_inc_beta(s: f64, a: f64, b: f64) -> Result<f64> {
    check_beta_params(a, b)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(JitError::Parameter(format!("s = {s} outside [0, 1]")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    if s == 1.0 {
        return Ok(1.0);
    }
    if a == 1.0 && b == 1.0 {
        return Ok(s);
    }

    let ln_norm = statrs::function::beta::ln_beta(a, b);
    let density = |x: f64| ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_norm).exp();

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = a / (a + b);
    for _ in 0..INVERSE_MAX_ITER {
        let f = reg_inc_beta(x, a, b)? - s;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * hi.max(1e-300) {
            return Ok(0.5 * (lo + hi));
        }
        let pdf = density(x);
        let newton = x - f / pdf;
        let next = if pdf.is_finite() && pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    let residual = (reg_inc_beta(x, a, b)? - s).abs();
    if residual <= 1e-9 {
        Ok(x)
    } else {
        Err(JitError::Numerical(format!(
            "inverse incomplete beta did not converge for s = {s}, a = {a}, b = {b} (residual {residual:e})"
        )))
    }
}

/// `t_i = i / n` for `i = 0..=n`.
pub fn uniform_timesteps(n_steps: usize) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(JitError::Parameter("need at least one step".into()));
    }
    Ok((0..=n_steps).map(|i| i as f64 / n_steps as f64).collect())
}

/// `t_i = F^-1(i / n; a, b)` with exact endpoints.
///
/// With `invert` the warp is mirrored, `t_i = 1 - F^-1(1 - i/n)`, which moves
/// the clustering of timesteps to the opposite end of `[0, 1]`.
pub fn beta_timesteps(n_steps: usize, a: f64, b: f64, invert: bool) -> Result<Vec<f64>> {
    check_beta_params(a, b)?;
    if a == 1.0 && b == 1.0 {
        return uniform_timesteps(n_steps);
    }
    let mut ts = uniform_timesteps(n_steps)?;
    for (i, t) in ts.iter_mut().enumerate() {
        if i == 0 || i == n_steps {
            continue;
        }
        *t = if invert {
            1.0 - inv_reg_inc_beta(1.0 - *t, a, b)?
        } else {
            inv_reg_inc_beta(*t, a, b)?
        };
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(JitError::Numerical(format!(
            "Beta({a}, {b}) warp with {n_steps} steps produced non-increasing timesteps"
        )));
    }
    Ok(ts)
}

/// Base anchors of the coarsest stage: every token at even (row, col) plus
/// the whole border.
pub fn strided_base(h: usize, w: usize) -> Vec<usize> {
    (0..h * w)
        .filter(|&i| {
            let (r, c) = (i / w, i % w);
            let border = r == 0 || c == 0 || r + 1 == h || c + 1 == w;
            border || (r % 2 == 0 && c % 2 == 0)
        })
        .collect()
}

/// Initial anchor set of exactly `budget` tokens.
///
/// Starts from [`strided_base`]; a shortfall is filled by sampling the
/// remaining tokens, an excess is trimmed by dropping base tokens, both
/// uniformly from the seeded selector stream.
pub fn initial_selector(h: usize, w: usize, budget: usize, seed: u64) -> Result<IndexSet> {
    let n = h * w;
    if n == 0 {
        return Err(JitError::Dimension("empty grid".into()));
    }
    if budget == 0 || budget > n {
        return Err(JitError::Budget(format!(
            "initial budget {budget} outside [1, {n}]"
        )));
    }
    let base = strided_base(h, w);
    let mut rng = NoiseStream::new(seed, StreamKind::Selector);
    let chosen = match base.len().cmp(&budget) {
        std::cmp::Ordering::Equal => base,
        std::cmp::Ordering::Greater => index::sample(&mut rng, base.len(), budget)
            .into_iter()
            .map(|j| base[j])
            .collect(),
        std::cmp::Ordering::Less => {
            let mut in_base = vec![false; n];
            base.iter().for_each(|&i| in_base[i] = true);
            let rest: Vec<usize> = (0..n).filter(|&i| !in_base[i]).collect();
            let extra = index::sample(&mut rng, rest.len(), budget - base.len());
            let mut out = base;
            out.extend(extra.into_iter().map(|j| rest[j]));
            out
        }
    };
    IndexSet::from_unsorted(n, chosen)
}

/// One stage: `steps` Euler steps with `sparsity * N` active tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub steps: usize,
    pub sparsity: f64,
}

/// Stages (coarse to fine), the timestep grid and where stages switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub name: String,
    pub stages: Vec<StageSpec>,
    pub timesteps: Vec<f64>,
    /// Solver-step indices at which the next finer stage begins.
    pub transition_steps: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub inverted: bool,
}

impl StageSchedule {
    /// Number of Euler steps, which is also the NFE.
    pub fn n_steps(&self) -> usize {
        self.timesteps.len() - 1
    }

    pub fn nfe(&self) -> usize {
        self.n_steps()
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// Stage label `k` for the stage at `position`
    /// (position 0 is the coarsest, label `K`; the finest is label 0).
    pub fn stage_label(&self, position: usize) -> usize {
        self.stages.len() - 1 - position
    }

    /// Stage position (0 = coarsest) that solver step `i` belongs to.
    pub fn stage_of_step(&self, step: usize) -> usize {
        self.transition_steps.iter().filter(|&&s| s <= step).count()
    }

    /// Active-token budget per stage, coarse to fine. The last entry is `n`.
    pub fn budgets(&self, n_tokens: usize) -> Result<Vec<usize>> {
        let last = self.stages.len() - 1;
        let budgets: Vec<usize> = self
            .stages
            .iter()
            .enumerate()
            .map(|(pos, st)| {
                if pos == last {
                    n_tokens
                } else {
                    (st.sparsity * n_tokens as f64).round_ties_even() as usize
                }
            })
            .collect();
        if budgets[0] == 0 {
            return Err(JitError::Schedule(format!(
                "coarsest stage rounds to zero tokens at N = {n_tokens}"
            )));
        }
        if let Some(pos) = budgets.windows(2).position(|w| w[0] >= w[1]) {
            return Err(JitError::Schedule(format!(
                "token budgets {budgets:?} are not strictly increasing at stage {pos} (N = {n_tokens})"
            )));
        }
        Ok(budgets)
    }
}

fn validate_stages(stages: &[StageSpec]) -> Result<()> {
    let Some(last) = stages.last() else {
        return Err(JitError::Schedule("schedule has no stages".into()));
    };
    for (pos, st) in stages.iter().enumerate() {
        if st.steps == 0 {
            return Err(JitError::Schedule(format!("stage {pos} has zero steps")));
        }
        if !(st.sparsity > 0.0 && st.sparsity <= 1.0) {
            return Err(JitError::Schedule(format!(
                "stage {pos} sparsity {} outside (0, 1]",
                st.sparsity
            )));
        }
    }
    if last.sparsity != 1.0 {
        return Err(JitError::Schedule(format!(
            "final stage sparsity must be 1.0, got {}",
            last.sparsity
        )));
    }
    if let Some(pos) = stages
        .windows(2)
        .position(|w| w[0].sparsity >= w[1].sparsity)
    {
        return Err(JitError::Schedule(format!(
            "sparsity must strictly increase coarse to fine (stage {pos} -> {})",
            pos + 1
        )));
    }
    Ok(())
}

/// Assembles and validates a schedule; timesteps come from [`beta_timesteps`].
pub fn build_schedule(
    name: &str,
    stages: &[StageSpec],
    n_steps: usize,
    alpha: f64,
    beta: f64,
    invert: bool,
) -> Result<StageSchedule> {
    validate_stages(stages)?;
    let total: usize = stages.iter().map(|s| s.steps).sum();
    if total != n_steps {
        return Err(JitError::Schedule(format!(
            "stage steps sum to {total} but {n_steps} solver steps were requested"
        )));
    }
    let timesteps = beta_timesteps(n_steps, alpha, beta, invert)?;
    schedule_with_timesteps(name, stages, timesteps, alpha, beta, invert)
}

/// Like [`build_schedule`] but with an explicit timestep grid.
pub fn schedule_with_timesteps(
    name: &str,
    stages: &[StageSpec],
    timesteps: Vec<f64>,
    alpha: f64,
    beta: f64,
    invert: bool,
) -> Result<StageSchedule> {
    validate_stages(stages)?;
    let total: usize = stages.iter().map(|s| s.steps).sum();
    if timesteps.len() != total + 1 {
        return Err(JitError::Schedule(format!(
            "{} timesteps given for {total} steps",
            timesteps.len()
        )));
    }
    if timesteps[0] < 0.0 || timesteps[total] > 1.0 || timesteps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(JitError::Schedule(
            "timesteps must be strictly increasing within [0, 1]".into(),
        ));
    }
    let mut transition_steps = Vec::with_capacity(stages.len() - 1);
    let mut acc = 0;
    for st in &stages[..stages.len() - 1] {
        acc += st.steps;
        transition_steps.push(acc);
    }
    Ok(StageSchedule {
        name: name.to_string(),
        stages: stages.to_vec(),
        timesteps,
        transition_steps,
        alpha,
        beta,
        inverted: invert,
    })
}

/// Stage layout of a named preset: (stages, alpha, beta).
pub fn preset_stages(name: &str) -> Result<(Vec<StageSpec>, f64, f64)> {
    let st = |steps, sparsity| StageSpec { steps, sparsity };
    Ok(match name {
        "jit4x" => (
            vec![st(7, 0.35), st(4, 0.62), st(7, 1.0)],
            JIT_ALPHA,
            JIT_BETA,
        ),
        "jit7x" => (
            vec![st(4, 0.32), st(3, 0.60), st(4, 1.0)],
            JIT_ALPHA,
            JIT_BETA,
        ),
        "vanilla50" => (vec![st(50, 1.0)], 1.0, 1.0),
        "vanilla12" => (vec![st(12, 1.0)], 1.0, 1.0),
        "vanilla7" => (vec![st(7, 1.0)], 1.0, 1.0),
        other => {
            return Err(JitError::Parameter(format!(
                "unknown preset {other:?}; expected one of {PRESET_NAMES:?}"
            )))
        }
    })
}

pub fn preset(name: &str, invert: bool) -> Result<StageSchedule> {
    let (stages, alpha, beta) = preset_stages(name)?;
    let n: usize = stages.iter().map(|s| s.steps).sum();
    build_schedule(name, &stages, n, alpha, beta, invert)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incomplete_beta_closed_forms() {
        assert_eq!(reg_inc_beta(0.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 2.0, 3.0).unwrap(), 1.0);
        assert!((reg_inc_beta(0.37, 1.0, 1.0).unwrap() - 0.37).abs() < 1e-12);
        assert!((reg_inc_beta(0.5, 2.0, 1.0).unwrap() - 0.25).abs() < 1e-12);
        // I_x(1, b) = 1 - (1 - x)^b
        let x: f64 = 0.3;
        assert!((reg_inc_beta(x, 1.0, 0.42).unwrap() - (1.0 - (1.0 - x).powf(0.42))).abs() < 1e-12);
        assert!(reg_inc_beta(1.2, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn inverse_endpoints_and_uniform() {
        assert_eq!(inv_reg_inc_beta(0.0, 1.4, 0.42).unwrap(), 0.0);
        assert_eq!(inv_reg_inc_beta(1.0, 1.4, 0.42).unwrap(), 1.0);
        assert!((inv_reg_inc_beta(0.42, 1.0, 1.0).unwrap() - 0.42).abs() < 1e-15);
        // I_x(2, 1) = x^2
        assert!((inv_reg_inc_beta(0.25, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trips_on_fine_grid() {
        for &(a, b) in &[(1.0, 1.0), (1.4, 0.42), (2.0, 5.0)] {
            for i in 0..=1000 {
                let s = i as f64 * 1e-3;
                let x = inv_reg_inc_beta(s, a, b).unwrap();
                let back = reg_inc_beta(x, a, b).unwrap();
                assert!((back - s).abs() < 1e-8, "a={a} b={b} s={s} back={back}");
            }
        }
    }

    #[test]
    fn inverse_handles_extreme_tails() {
        for &s in &[1e-12, 1e-9, 1.0 - 1e-9, 1.0 - 1e-12] {
            let x = inv_reg_inc_beta(s, JIT_ALPHA, JIT_BETA).unwrap();
            let back = reg_inc_beta(x, JIT_ALPHA, JIT_BETA).unwrap();
            assert!((back - s).abs() < 1e-9, "s={s} back={back}");
        }
    }

    #[test]
    fn uniform_warp_is_linear() {
        assert_eq!(
            beta_timesteps(4, 1.0, 1.0, false).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn warps_are_strictly_increasing_with_exact_ends() {
        for invert in [false, true] {
            for &(a, b) in &[(1.4, 0.42), (2.0, 5.0), (0.5, 0.5)] {
                let ts = beta_timesteps(18, a, b, invert).unwrap();
                assert_eq!(ts[0], 0.0);
                assert_eq!(ts[18], 1.0);
                assert!(ts.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn inverted_warp_mirrors() {
        let fwd = beta_timesteps(10, 1.4, 0.42, false).unwrap();
        let inv = beta_timesteps(10, 1.4, 0.42, true).unwrap();
        for i in 0..=10 {
            assert!((inv[i] - (1.0 - fwd[10 - i])).abs() < 1e-12);
        }
    }

    #[test]
    fn strided_base_sizes() {
        assert_eq!(strided_base(8, 8).len(), 37);
        assert_eq!(strided_base(4, 4).len(), 13);
        assert!(strided_base(4, 4).contains(&10)); // (2, 2)
    }

    #[test]
    fn selector_hits_budget() {
        let base = strided_base(8, 8);
        assert_eq!(initial_selector(8, 8, 37, 11).unwrap().indices(), &base[..]);
        for budget in [1, 22, 40, 64] {
            let s = initial_selector(8, 8, budget, 5).unwrap();
            assert_eq!(s.len(), budget);
        }
        let grown = initial_selector(8, 8, 40, 5).unwrap();
        assert!(base.iter().all(|&i| grown.contains(i)));
        let shrunk = initial_selector(8, 8, 22, 5).unwrap();
        assert!(shrunk.indices().iter().all(|i| base.contains(i)));
        assert!(matches!(
            initial_selector(8, 8, 0, 1),
            Err(JitError::Budget(_))
        ));
        assert!(matches!(
            initial_selector(8, 8, 65, 1),
            Err(JitError::Budget(_))
        ));
    }

    #[test]
    fn selector_is_deterministic() {
        assert_eq!(
            initial_selector(16, 16, 60, 42).unwrap(),
            initial_selector(16, 16, 60, 42).unwrap()
        );
        assert_ne!(
            initial_selector(16, 16, 60, 42).unwrap(),
            initial_selector(16, 16, 60, 43).unwrap()
        );
    }

    #[test]
    fn presets_match_table() {
        let s = preset("jit4x", false).unwrap();
        assert_eq!(s.nfe(), 18);
        assert_eq!(
            s.stages.iter().map(|s| s.steps).collect::<Vec<_>>(),
            vec![7, 4, 7]
        );
        assert_eq!(
            s.stages.iter().map(|s| s.sparsity).collect::<Vec<_>>(),
            vec![0.35, 0.62, 1.0]
        );
        assert_eq!(s.transition_steps, vec![7, 11]);

        let s = preset("jit7x", false).unwrap();
        assert_eq!(s.nfe(), 11);
        assert_eq!(
            s.stages.iter().map(|s| s.steps).collect::<Vec<_>>(),
            vec![4, 3, 4]
        );
        assert_eq!(
            s.stages.iter().map(|s| s.sparsity).collect::<Vec<_>>(),
            vec![0.32, 0.60, 1.0]
        );
        assert_eq!(s.transition_steps, vec![4, 7]);

        let s = preset("vanilla50", false).unwrap();
        assert_eq!(s.nfe(), 50);
        assert!(s.transition_steps.is_empty());
        assert!(preset("nope", false).is_err());
    }

    #[test]
    fn stage_lookup_and_budgets() {
        let s = preset("jit4x", false).unwrap();
        assert_eq!(s.stage_of_step(0), 0);
        assert_eq!(s.stage_of_step(6), 0);
        assert_eq!(s.stage_of_step(7), 1);
        assert_eq!(s.stage_of_step(11), 2);
        assert_eq!(s.stage_label(0), 2);
        assert_eq!(s.budgets(1024).unwrap(), vec![358, 635, 1024]);
        // 0.5 * 5 = 2.5 rounds to even
        let half = build_schedule(
            "h",
            &[
                StageSpec {
                    steps: 1,
                    sparsity: 0.5,
                },
                StageSpec {
                    steps: 1,
                    sparsity: 1.0,
                },
            ],
            2,
            1.0,
            1.0,
            false,
        )
        .unwrap();
        assert_eq!(half.budgets(5).unwrap(), vec![2, 5]);
        assert!(s.budgets(2).is_err());
    }

    #[test]
    fn invalid_stage_layouts_are_named() {
        let st = |steps, sparsity| StageSpec { steps, sparsity };
        let err = |stages: &[StageSpec], n| {
            build_schedule("x", stages, n, 1.0, 1.0, false)
                .unwrap_err()
                .to_string()
        };
        assert!(err(&[st(2, 0.5), st(2, 0.9)], 4).contains("final stage"));
        assert!(err(&[st(2, 0.6), st(2, 0.5), st(2, 1.0)], 6).contains("strictly increase"));
        assert!(err(&[st(0, 1.0)], 0).contains("zero steps"));
        assert!(err(&[st(2, 0.5), st(2, 1.0)], 5).contains("sum to 4"));
    }
}
