//! Sparse-anchor flow-matching sampler.
//!
//! Each step evaluates the velocity field on the active tokens only, lifts
//! the result to the full grid with the stage's [`Lifter`] and takes an
//! explicit Euler step on every token. At stage boundaries the anchor set
//! grows through [`apply_transition`].

use serde::{Deserialize, Serialize};

use crate::cost::{schedule_cost, step_cost, CostModel, DEFAULT_BASELINE_STEPS};
use crate::error::{JitError, Result};
use crate::grid::{gather, ActiveBlock, GridShape, IndexSet, TokenGrid};
use crate::interp::Lifter;
use crate::rng::{NoiseStream, StreamKind};
use crate::schedule::{initial_selector, StageSchedule};
use crate::transition::{apply_transition, TransitionInput, TransitionRecord};

/// A velocity model evaluated on a subset of tokens.
///
/// `evaluate` receives the active tokens (in ascending index order) with
/// their grid indices and returns one velocity per active token. It must be
/// deterministic and callable from several threads at once.
pub trait VelocityField: Send + Sync {
    fn evaluate(&self, active: &ActiveBlock, indices: &IndexSet, t: f64) -> Result<ActiveBlock>;

    fn descriptor(&self) -> String;
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn evaluate(&self, active: &ActiveBlock, indices: &IndexSet, t: f64) -> Result<ActiveBlock> {
        (**self).evaluate(active, indices, t)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

impl<F: VelocityField + ?Sized> VelocityField for Box<F> {
    fn evaluate(&self, active: &ActiveBlock, indices: &IndexSet, t: f64) -> Result<ActiveBlock> {
        (**self).evaluate(active, indices, t)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

/// Calls the field and checks its output contract.
pub fn evaluate_checked<F: VelocityField + ?Sized>(
    field: &F,
    active: &ActiveBlock,
    indices: &IndexSet,
    t: f64,
) -> Result<ActiveBlock> {
    let out = field.evaluate(active, indices, t)?;
    if out.m() != active.m() || out.d() != active.d() {
        return Err(JitError::FieldContract(format!(
            "{} returned {}x{} for a {}x{} input",
            field.descriptor(),
            out.m(),
            out.d(),
            active.m(),
            active.d()
        )));
    }
    if out.values().iter().any(|v| !v.is_finite()) {
        return Err(JitError::FieldContract(format!(
            "{} returned non-finite velocities at t = {t}",
            field.descriptor()
        )));
    }
    Ok(out)
}

/// Full-grid velocity from anchor-only evaluation, reusing `lifter`.
pub fn sag_velocity_with<F: VelocityField + ?Sized>(
    field: &F,
    y: &TokenGrid,
    lifter: &Lifter,
    t: f64,
) -> Result<TokenGrid> {
    if y.shape() != lifter.shape() {
        return Err(JitError::Dimension(format!(
            "state {:?} does not match lifter {:?}",
            y.shape(),
            lifter.shape()
        )));
    }
    let active = gather(y, lifter.set())?;
    let u = evaluate_checked(field, &active, lifter.set(), t)?;
    lifter.lift(&u)
}

/// `Pi u(S^T y, t)`: evaluate on `set`, lift to the full grid.
pub fn sag_velocity<F: VelocityField + ?Sized>(
    field: &F,
    y: &TokenGrid,
    set: &IndexSet,
    t: f64,
) -> Result<TokenGrid> {
    sag_velocity_with(field, y, &Lifter::new(set, y.shape())?, t)
}

/// `y + v dt`, computed in f64 per element.
pub fn euler_step(y: &TokenGrid, v: &TokenGrid, dt: f64) -> Result<TokenGrid> {
    y.check_same_shape(v)?;
    if !(dt > 0.0) {
        return Err(JitError::Parameter(format!(
            "step size must be > 0, got {dt}"
        )));
    }
    let data = y
        .data()
        .iter()
        .zip(v.data())
        .map(|(&y, &v)| (y as f64 + v as f64 * dt) as f32)
        .collect();
    TokenGrid::from_vec(y.shape(), data)
}

/// Standard-normal initial state shared by the sampler and reference solves.
pub fn initial_noise(shape: GridShape, seed: u64) -> TokenGrid {
    let mut grid = TokenGrid::zeros(shape);
    NoiseStream::new(seed, StreamKind::InitialNoise).fill_normal(grid.data_mut());
    grid
}

/// How transition noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// A new full-grid draw at every transition.
    #[default]
    Fresh,
    /// One draw at the start of the run, reused by every transition.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub noise_mode: NoiseMode,
    /// Keep a full-grid snapshot every `n` steps (and the endpoint); 0 keeps none.
    pub trajectory_stride: usize,
    pub cost_model: CostModel,
    pub baseline_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            noise_mode: NoiseMode::Fresh,
            trajectory_stride: 0,
            cost_model: CostModel::default(),
            baseline_steps: DEFAULT_BASELINE_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// Stage label `k` (0 is the dense stage).
    pub stage: usize,
    pub active: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl GridStats {
    pub fn of(grid: &TokenGrid) -> Self {
        let n = grid.data().len() as f64;
        let mean = grid.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = grid
            .data()
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let (min, max) = grid
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v as f64), hi.max(v as f64))
            });
        Self {
            mean,
            std: var.sqrt(),
            min,
            max,
        }
    }
}

/// Trace and outputs of one sampler run.
///
/// The endpoint grid and trajectory snapshots are kept in memory and written
/// as grid files; the serialised report carries summary statistics instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schedule: String,
    pub seed: u64,
    pub field: String,
    pub shape: GridShape,
    pub nfe: usize,
    pub timesteps: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub transitions: Vec<TransitionRecord>,
    /// Realised anchor sets, coarse to fine.
    pub anchor_chain: Vec<IndexSet>,
    pub cost_model: CostModel,
    pub total_cost: f64,
    pub baseline_steps: usize,
    pub baseline_cost: f64,
    pub speedup_vs_baseline: f64,
    pub endpoint_stats: GridStats,
    #[serde(skip)]
    pub endpoint: TokenGrid,
    #[serde(skip)]
    pub trajectory: Vec<(usize, TokenGrid)>,
}

/// Runs the full sampler over `schedule`.
pub fn run<F: VelocityField + ?Sized>(
    schedule: &StageSchedule,
    field: &F,
    shape: GridShape,
    seed: u64,
    options: &RunOptions,
) -> Result<RunReport> {
    let n = shape.tokens();
    let budgets = schedule.budgets(n)?;
    let n_steps = schedule.n_steps();
    if options.baseline_steps == 0 {
        return Err(JitError::Parameter(
            "baseline steps must be positive".into(),
        ));
    }
    options.cost_model.validate()?;

    let mut y = initial_noise(shape, seed);
    let mut transition_noise = NoiseStream::new(seed, StreamKind::Transition);
    let shared_noise = match options.noise_mode {
        NoiseMode::Shared => {
            let mut g = TokenGrid::zeros(shape);
            transition_noise.fill_normal(g.data_mut());
            Some(g)
        }
        NoiseMode::Fresh => None,
    };

    let mut anchors = initial_selector(shape.h, shape.w, budgets[0], seed)?;
    let mut lifter = Lifter::new(&anchors, shape)?;
    let mut chain = vec![anchors.clone()];
    let mut position = 0usize;
    let mut prev: Option<(TokenGrid, TokenGrid)> = None;
    let mut steps = Vec::with_capacity(n_steps);
    let mut transitions = Vec::new();
    let mut trajectory = Vec::new();
    let stride = options.trajectory_stride;

    for i in 0..n_steps {
        let t = schedule.timesteps[i];
        if schedule.transition_steps.contains(&i) {
            let (prev_y, prev_v) = prev.as_ref().ok_or_else(|| {
                JitError::Schedule("transition scheduled before the first step".into()).at_step(i)
            })?;
            let fresh;
            let noise = match &shared_noise {
                Some(g) => g,
                None => {
                    let mut g = TokenGrid::zeros(shape);
                    transition_noise.fill_normal(g.data_mut());
                    fresh = g;
                    &fresh
                }
            };
            let input = TransitionInput {
                state: &y,
                prev_state: prev_y,
                prev_velocity: prev_v,
                prev_time: schedule.timesteps[i - 1],
                switch_time: t,
                step_index: i,
                anchors: &anchors,
                stage: schedule.stage_label(position),
                next_budget: budgets[position + 1],
            };
            let out = apply_transition(&input, noise).map_err(|e| e.at_step(i))?;
            y = out.state;
            anchors = out.anchors;
            lifter = Lifter::new(&anchors, shape).map_err(|e| e.at_step(i))?;
            chain.push(anchors.clone());
            transitions.push(out.record);
            position += 1;
        }

        let v = sag_velocity_with(field, &y, &lifter, t).map_err(|e| e.at_step(i))?;
        let dt = schedule.timesteps[i + 1] - t;
        let next = euler_step(&y, &v, dt).map_err(|e| e.at_step(i))?;
        if !next.is_finite() {
            return Err(JitError::Numerical("state became non-finite".into()).at_step(i));
        }
        steps.push(StepRecord {
            step: i,
            t,
            stage: schedule.stage_label(position),
            active: anchors.len(),
            cost: step_cost(anchors.len(), &options.cost_model),
        });
        if stride > 0 && i % stride == 0 {
            trajectory.push((i, y.clone()));
        }
        prev = Some((y, v));
        y = next;
    }
    if stride > 0 {
        trajectory.push((n_steps, y.clone()));
    }

    let cost = schedule_cost(schedule, n, &options.cost_model, options.baseline_steps)?;
    let total_cost: f64 = steps.iter().map(|s| s.cost).sum();
    Ok(RunReport {
        schedule: schedule.name.clone(),
        seed,
        field: field.descriptor(),
        shape,
        nfe: steps.len(),
        timesteps: schedule.timesteps.clone(),
        steps,
        transitions,
        anchor_chain: chain,
        cost_model: options.cost_model,
        total_cost,
        baseline_steps: options.baseline_steps,
        baseline_cost: cost.baseline,
        speedup_vs_baseline: cost.baseline / total_cost,
        endpoint_stats: GridStats::of(&y),
        endpoint: y,
        trajectory,
    })
}
