//! Analytic velocity fields with known ground truth, plus record/replay.
//!
//! [`GaussianFlowField`] is the exact marginal velocity of the linear path
//! `x_t = t x1 + (1 - t) x0` with `x0 ~ N(0, 1)` and `x1 ~ N(mu, sigma1^2)`
//! independently per token and channel. It is pointwise, so evaluating it on
//! a subset equals restricting the dense evaluation; spatial structure comes
//! from `mu` alone.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{JitError, Result};
use crate::grid::{gather, ActiveBlock, GridShape, IndexSet, TokenGrid};
use crate::sampler::{euler_step, evaluate_checked, initial_noise, VelocityField};
use crate::schedule::uniform_timesteps;

/// `E[x1 - x0 | x_t = x]` for the Gaussian linear path.
pub fn gaussian_flow_velocity(x: f64, t: f64, mu: f64, sigma1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(JitError::Parameter(format!("t = {t} outside [0, 1]")));
    }
    if sigma1 < 0.0 {
        return Err(JitError::Parameter(format!(
            "sigma1 = {sigma1} is negative"
        )));
    }
    let (a, b) = (t, 1.0 - t);
    let var = a * a * sigma1 * sigma1 + b * b;
    if var == 0.0 {
        return Err(JitError::Numerical(
            "velocity is singular at t = 1 for a point-mass target".into(),
        ));
    }
    Ok(mu + (a * sigma1 * sigma1 - b) / var * (x - a * mu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFlowField {
    mu: TokenGrid,
    /// Per-token target standard deviation.
    sigma1: Vec<f64>,
}

impl GaussianFlowField {
    pub fn new(mu: TokenGrid, sigma1: Vec<f64>) -> Result<Self> {
        if sigma1.len() != mu.shape().tokens() {
            return Err(JitError::Dimension(format!(
                "{} sigma values for {} tokens",
                sigma1.len(),
                mu.shape().tokens()
            )));
        }
        if sigma1.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(JitError::Parameter("sigma1 must be finite and >= 0".into()));
        }
        if !mu.is_finite() {
            return Err(JitError::Parameter("target mean must be finite".into()));
        }
        Ok(Self { mu, sigma1 })
    }

    pub fn with_uniform_sigma(mu: TokenGrid, sigma1: f64) -> Result<Self> {
        let n = mu.shape().tokens();
        Self::new(mu, vec![sigma1; n])
    }

    pub fn mu(&self) -> &TokenGrid {
        &self.mu
    }

    pub fn sigma1(&self) -> &[f64] {
        &self.sigma1
    }
}

impl VelocityField for GaussianFlowField {
    fn evaluate(&self, active: &ActiveBlock, indices: &IndexSet, t: f64) -> Result<ActiveBlock> {
        let shape = self.mu.shape();
        if indices.n_total() != shape.tokens()
            || active.d() != shape.d
            || active.m() != indices.len()
        {
            return Err(JitError::Dimension(format!(
                "field over {:?} got {} tokens of {} channels at {} indices of {}",
                shape,
                active.m(),
                active.d(),
                indices.len(),
                indices.n_total()
            )));
        }
        let mut out = ActiveBlock::zeros(active.m(), active.d());
        for (j, &i) in indices.indices().iter().enumerate() {
            let mu = self.mu.token(i);
            let s = self.sigma1[i];
            for ((o, &x), &m) in out.row_mut(j).iter_mut().zip(active.row(j)).zip(mu) {
                *o = gaussian_flow_velocity(x as f64, t, m as f64, s)? as f32;
            }
        }
        Ok(out)
    }

    fn descriptor(&self) -> String {
        let s = self.sigma1.first().copied().unwrap_or(0.0);
        let uniform = self.sigma1.iter().all(|&v| v == s);
        if uniform {
            format!("gaussian-flow(sigma1={s})")
        } else {
            "gaussian-flow(sigma1=per-token)".to_string()
        }
    }
}

/// Spatially structured target means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetImage {
    /// `lo + (hi - lo) * index / (N - 1)` in row-major order.
    SmoothGradient { lo: f32, hi: f32 },
    /// `+1` / `-1` on alternating `cell x cell` blocks, `+1` at the origin.
    Checkerboard { cell: usize },
    /// `exp(-r^2 / 2 s^2)` around token `(h/2, w/2)`.
    GaussianBump { width: f64 },
}

impl TargetImage {
    pub fn parse(kind: &str, shape: GridShape) -> Result<Self> {
        Ok(match kind {
            "smooth-gradient" => TargetImage::SmoothGradient { lo: 0.0, hi: 1.0 },
            "checkerboard" => TargetImage::Checkerboard { cell: 1 },
            "gaussian-bump" => TargetImage::GaussianBump {
                width: default_bump_width(shape),
            },
            other => {
                return Err(JitError::Parameter(format!(
                    "unknown target kind {other:?}; expected smooth-gradient, checkerboard or gaussian-bump"
                )))
            }
        })
    }
}

pub fn default_bump_width(shape: GridShape) -> f64 {
    shape.h.min(shape.w) as f64 / 6.0
}

/// Deterministic target mean; every channel carries the same pattern.
pub fn make_target_image(kind: TargetImage, shape: GridShape) -> Result<TokenGrid> {
    let n = shape.tokens();
    let value = |i: usize| -> f32 {
        let (r, c) = shape.coords(i);
        match kind {
            TargetImage::SmoothGradient { lo, hi } => {
                if n == 1 {
                    lo
                } else {
                    (lo as f64 + (hi - lo) as f64 * i as f64 / (n - 1) as f64) as f32
                }
            }
            TargetImage::Checkerboard { cell } => {
                if (r / cell + c / cell) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            TargetImage::GaussianBump { width } => {
                let dr = r as f64 - (shape.h / 2) as f64;
                let dc = c as f64 - (shape.w / 2) as f64;
                (-(dr * dr + dc * dc) / (2.0 * width * width)).exp() as f32
            }
        }
    };
    match kind {
        TargetImage::Checkerboard { cell: 0 } => {
            return Err(JitError::Parameter("checkerboard cell must be >= 1".into()))
        }
        TargetImage::GaussianBump { width } if !(width > 0.0) => {
            return Err(JitError::Parameter("bump width must be > 0".into()))
        }
        _ => {}
    }
    let mut grid = TokenGrid::zeros(shape);
    for i in 0..n {
        let v = value(i);
        grid.token_mut(i).iter_mut().for_each(|x| *x = v);
    }
    Ok(grid)
}

/// Dense explicit Euler over `timesteps` from the sampler's initial noise.
pub fn reference_solve_on<F: VelocityField + ?Sized>(
    field: &F,
    shape: GridShape,
    seed: u64,
    timesteps: &[f64],
) -> Result<TokenGrid> {
    if timesteps.len() < 2 {
        return Err(JitError::Parameter("need at least two timesteps".into()));
    }
    let all = IndexSet::full(shape.tokens());
    let mut y = initial_noise(shape, seed);
    for (i, w) in timesteps.windows(2).enumerate() {
        let active = gather(&y, &all)?;
        let u = evaluate_checked(field, &active, &all, w[0]).map_err(|e| e.at_step(i))?;
        let v = TokenGrid::from_vec(shape, u.into_vec())?;
        y = euler_step(&y, &v, w[1] - w[0]).map_err(|e| e.at_step(i))?;
    }
    Ok(y)
}

/// [`reference_solve_on`] with `n_fine_steps` uniform steps.
pub fn reference_solve<F: VelocityField + ?Sized>(
    field: &F,
    shape: GridShape,
    seed: u64,
    n_fine_steps: usize,
) -> Result<TokenGrid> {
    reference_solve_on(field, shape, seed, &uniform_timesteps(n_fine_steps)?)
}

/// `||x - reference|| / ||reference||` over all values, in f64. Falls back
/// to the absolute norm when the reference is zero.
pub fn relative_l2_error(x: &TokenGrid, reference: &TokenGrid) -> Result<f64> {
    x.check_same_shape(reference)?;
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (&a, &b) in x.data().iter().zip(reference.data()) {
        num += (a as f64 - b as f64).powi(2);
        den += (b as f64).powi(2);
    }
    Ok(if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    })
}

/// Key of a recorded evaluation: active indices and the bit pattern of `t`.
pub type ReplayKey = (Vec<usize>, u64);

/// Recorded field outputs keyed by `(indices, t)`.
///
/// Strict replay fails on an unknown key; lenient replay answers with zero
/// velocity.
#[derive(Debug, Clone, Default)]
pub struct ReplayField {
    n_total: usize,
    entries: BTreeMap<ReplayKey, ActiveBlock>,
    strict: bool,
}

impl ReplayField {
    pub fn new(n_total: usize, strict: bool) -> Self {
        Self {
            n_total,
            entries: BTreeMap::new(),
            strict,
        }
    }

    pub fn insert(&mut self, indices: &IndexSet, t: f64, output: ActiveBlock) -> Result<()> {
        if indices.n_total() != self.n_total {
            return Err(JitError::Dimension(format!(
                "indices over {} tokens, replay over {}",
                indices.n_total(),
                self.n_total
            )));
        }
        if output.m() != indices.len() {
            return Err(JitError::Dimension(format!(
                "{} outputs for {} indices",
                output.m(),
                indices.len()
            )));
        }
        self.entries
            .insert((indices.indices().to_vec(), t.to_bits()), output);
        Ok(())
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&ReplayKey, &ActiveBlock)> {
        self.entries.iter()
    }
}

impl VelocityField for ReplayField {
    fn evaluate(&self, active: &ActiveBlock, indices: &IndexSet, t: f64) -> Result<ActiveBlock> {
        let key = (indices.indices().to_vec(), t.to_bits());
        match self.entries.get(&key) {
            Some(block) => Ok(block.clone()),
            None if self.strict => Err(JitError::FieldContract(format!(
                "no recorded output for {} indices at t = {t}",
                indices.len()
            ))),
            None => Ok(ActiveBlock::zeros(active.m(), active.d())),
        }
    }

    fn descriptor(&self) -> String {
        format!("replay({} entries)", self.entries.len())
    }
}

/// Wraps a field and remembers every evaluation.
#[derive(Debug)]
pub struct RecordingField<F> {
    inner: F,
    n_total: usize,
    log: Mutex<ReplayField>,
}

impl<F: VelocityField> RecordingField<F> {
    pub fn new(inner: F, n_total: usize) -> Self {
        Self {
            inner,
            n_total,
            log: Mutex::new(ReplayField::new(n_total, true)),
        }
    }

    pub fn into_replay(self, strict: bool) -> ReplayField {
        let mut replay = self
            .log
            .into_inner()
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        replay.set_strict(strict);
        replay
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }
}

impl<F: VelocityField> VelocityField for RecordingField<F> {
    fn evaluate(&self, active: &ActiveBlock, indices: &IndexSet, t: f64) -> Result<ActiveBlock> {
        let out = self.inner.evaluate(active, indices, t)?;
        let mut log = self.log.lock().unwrap_or_else(|p| p.into_inner());
        log.insert(indices, t, out.clone())?;
        Ok(out)
    }

    fn descriptor(&self) -> String {
        format!("recording({})", self.inner.descriptor())
    }
}
