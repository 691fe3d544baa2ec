//! Stage transitions: activating new tokens with a deterministic micro-flow.
//!
//! When a stage ends, the tokens with the highest local velocity variance
//! among the inactive ones join the anchor set. Their state is moved onto a
//! target that mixes the interpolated clean-latent prediction with fresh
//! Gaussian noise at the current noise level. The hitting ODE that performs
//! this move reaches its target exactly at the switch time, so the sampler
//! assigns the target directly; [`hitting_flow`] gives the closed-form path.

use serde::{Deserialize, Serialize};

use crate::error::{JitError, Result};
use crate::grid::{complement, gather, ActiveBlock, IndexSet, TokenGrid};
use crate::importance::{importance_map, top_tokens, ImportanceMap, DEFAULT_WINDOW};
use crate::interp::lift;

/// What happened at one stage switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub step_index: usize,
    /// Stage label `k` being left (coarser).
    pub stage_from: usize,
    /// Stage label `k - 1` being entered.
    pub stage_to: usize,
    /// Switch time `T_k`.
    pub switch_time: f64,
    /// Newly activated tokens `R_k`.
    pub activated: IndexSet,
    /// Values assigned to `activated`, in index order.
    pub target_values: ActiveBlock,
    pub importance_snapshot: ImportanceMap,
}

/// Tweedie one-step clean estimate `y + (1 - t) v`.
pub fn predict_clean(y: &TokenGrid, t: f64, v: &TokenGrid) -> Result<TokenGrid> {
    if !(0.0..1.0).contains(&t) {
        return Err(JitError::Parameter(format!(
            "clean prediction needs 0 <= t < 1, got {t}"
        )));
    }
    y.check_same_shape(v)?;
    let scale = 1.0 - t;
    let data = y
        .data()
        .iter()
        .zip(v.data())
        .map(|(&y, &v)| (y as f64 + scale * v as f64) as f32)
        .collect();
    TokenGrid::from_vec(y.shape(), data)
}

/// Target state of the ring tokens: `T Phi(r) + (1 - T) noise(r)`, where
/// `Phi` interpolates the anchor values of `y_hat` over the whole grid.
pub fn dmf_target(
    y_hat: &TokenGrid,
    anchors: &IndexSet,
    ring: &IndexSet,
    switch_time: f64,
    noise: &TokenGrid,
) -> Result<ActiveBlock> {
    y_hat.check_same_shape(noise)?;
    if ring.n_total() != anchors.n_total() {
        return Err(JitError::Dimension(format!(
            "ring covers {} tokens, anchors {}",
            ring.n_total(),
            anchors.n_total()
        )));
    }
    if let Some(&i) = ring.indices().iter().find(|&&i| anchors.contains(i)) {
        return Err(JitError::Nesting(format!(
            "token {i} is both an anchor and newly activated"
        )));
    }
    let prior = lift(&gather(y_hat, anchors)?, anchors, y_hat.shape())?;
    let d = y_hat.shape().d;
    let mut values = Vec::with_capacity(ring.len() * d);
    for &i in ring.indices() {
        for (p, e) in prior.token(i).iter().zip(noise.token(i)) {
            values.push((switch_time * *p as f64 + (1.0 - switch_time) * *e as f64) as f32);
        }
    }
    ActiveBlock::new(d, values)
}

/// Closed-form solution of `z' = (target - z) / (T - t)` on `[T - delta, T]`
/// starting from `z0`: a linear contraction that lands on `target` at `T`.
pub fn hitting_flow(
    z0: &[f64],
    target: &[f64],
    switch_time: f64,
    delta: f64,
    t: f64,
) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(JitError::Parameter(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if t < switch_time - delta || t > switch_time {
        return Err(JitError::Parameter(format!(
            "t = {t} outside [{}, {switch_time}]",
            switch_time - delta
        )));
    }
    if z0.len() != target.len() {
        return Err(JitError::Dimension(format!(
            "state has {} values, target {}",
            z0.len(),
            target.len()
        )));
    }
    let remaining = (switch_time - t) / delta;
    Ok(z0
        .iter()
        .zip(target)
        .map(|(&z, &y)| y - (y - z) * remaining)
        .collect())
}

/// Everything a stage switch reads.
#[derive(Debug, Clone, Copy)]
pub struct TransitionInput<'a> {
    /// State `y_{t_i}` at the switch step.
    pub state: &'a TokenGrid,
    /// State `y_{t_{i-1}}` one step earlier.
    pub prev_state: &'a TokenGrid,
    /// Lifted velocity `v_{t_{i-1}}` of the previous step.
    pub prev_velocity: &'a TokenGrid,
    /// Time `t_{i-1}`.
    pub prev_time: f64,
    /// Switch time `T_k = t_i`.
    pub switch_time: f64,
    pub step_index: usize,
    /// Current anchors `Omega_k`.
    pub anchors: &'a IndexSet,
    /// Stage label `k` being left.
    pub stage: usize,
    /// Budget `m_{k-1}` of the next stage.
    pub next_budget: usize,
}

/// Result of [`apply_transition`].
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: TokenGrid,
    pub anchors: IndexSet,
    pub record: TransitionRecord,
}

/// Grows the anchor set by importance and moves the new tokens onto their
/// micro-flow target. Existing anchors are left untouched.
pub fn apply_transition(input: &TransitionInput<'_>, noise: &TokenGrid) -> Result<Transition> {
    if input.stage == 0 {
        return Err(JitError::NoStage);
    }
    let anchors = input.anchors;
    let n = anchors.n_total();
    if input.next_budget <= anchors.len() || input.next_budget > n {
        return Err(JitError::Schedule(format!(
            "next budget {} must lie in ({}, {n}]",
            input.next_budget,
            anchors.len()
        )));
    }
    input.state.check_same_shape(input.prev_state)?;
    input.state.check_same_shape(input.prev_velocity)?;

    let importance = importance_map(input.prev_velocity, DEFAULT_WINDOW)?;
    let activated = top_tokens(
        &importance,
        &complement(anchors),
        input.next_budget - anchors.len(),
    )?;
    let next_anchors = anchors.union(&activated)?;

    let y_hat = predict_clean(input.prev_state, input.prev_time, input.prev_velocity)?;
    let target = dmf_target(&y_hat, anchors, &activated, input.switch_time, noise)?;

    let mut state = input.state.clone();
    for (j, &i) in activated.indices().iter().enumerate() {
        state.token_mut(i).copy_from_slice(target.row(j));
    }

    Ok(Transition {
        state,
        anchors: next_anchors,
        record: TransitionRecord {
            step_index: input.step_index,
            stage_from: input.stage,
            stage_to: input.stage - 1,
            switch_time: input.switch_time,
            activated,
            target_values: target,
            importance_snapshot: importance,
        },
    })
}
