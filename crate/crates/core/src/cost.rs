//! Transformer cost model and speedup accounting.
//!
//! Per-step cost is `c_attn (m + n_ctx)^2 + c_lin (m + n_ctx) + c_fix` for
//! `m` active image tokens. Speedup is measured against a dense baseline
//! with a fixed number of steps, in the same abstract units.

use serde::{Deserialize, Serialize};

use crate::error::{JitError, Result};
use crate::schedule::StageSchedule;

pub const DEFAULT_BASELINE_STEPS: usize = 50;

/// Reported accelerations of the two accelerated presets over a 50-step
/// dense baseline.
pub const REPORTED_SPEEDUPS: [(&str, f64); 2] = [("jit4x", 4.24), ("jit7x", 7.07)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c_attn: f64,
    pub c_lin: f64,
    pub c_fix: f64,
    #[serde(default)]
    pub n_ctx: usize,
}

impl Default for CostModel {
    fn default() -> Self {
        Self::pure_quadratic()
    }
}

impl CostModel {
    pub fn new(c_attn: f64, c_lin: f64, c_fix: f64, n_ctx: usize) -> Result<Self> {
        let model = Self {
            c_attn,
            c_lin,
            c_fix,
            n_ctx,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = [self.c_attn, self.c_lin, self.c_fix];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(JitError::Parameter(format!(
                "cost coefficients must be finite and non-negative: {self:?}"
            )));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(JitError::Parameter("cost model is identically zero".into()));
        }
        Ok(())
    }

    pub fn pure_quadratic() -> Self {
        Self {
            c_attn: 1.0,
            c_lin: 0.0,
            c_fix: 0.0,
            n_ctx: 0,
        }
    }

    pub fn pure_linear() -> Self {
        Self {
            c_attn: 0.0,
            c_lin: 1.0,
            c_fix: 0.0,
            n_ctx: 0,
        }
    }

    /// `alpha (m/N)^2 + (1 - alpha) (m/N)`: a dense step costs exactly 1.
    pub fn normalized(attention_share: f64, n_tokens: usize) -> Self {
        let n = n_tokens as f64;
        Self {
            c_attn: attention_share / (n * n),
            c_lin: (1.0 - attention_share) / n,
            c_fix: 0.0,
            n_ctx: 0,
        }
    }
}

pub fn step_cost(active: usize, model: &CostModel) -> f64 {
    let tokens = (active + model.n_ctx) as f64;
    model.c_attn * tokens * tokens + model.c_lin * tokens + model.c_fix
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCost {
    pub total: f64,
    pub baseline: f64,
    pub speedup: f64,
}

/// Total cost of `schedule` on `n_tokens` tokens and its speedup over a
/// dense `baseline_steps` run.
pub fn schedule_cost(
    schedule: &StageSchedule,
    n_tokens: usize,
    model: &CostModel,
    baseline_steps: usize,
) -> Result<ScheduleCost> {
    model.validate()?;
    let budgets = schedule.budgets(n_tokens)?;
    let total: f64 = schedule
        .stages
        .iter()
        .zip(&budgets)
        .map(|(st, &m)| st.steps as f64 * step_cost(m, model))
        .sum();
    let baseline = baseline_steps as f64 * step_cost(n_tokens, model);
    Ok(ScheduleCost {
        total,
        baseline,
        speedup: baseline / total,
    })
}

/// Outcome of fitting the attention share to reported speedups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub attention_share: f64,
    pub predicted: Vec<f64>,
    pub targets: Vec<f64>,
    /// `predicted / target - 1` per target.
    pub relative_errors: Vec<f64>,
}

fn calibration_loss(
    share: f64,
    targets: &[(StageSchedule, f64)],
    n_tokens: usize,
    baseline_steps: usize,
) -> Result<(f64, Vec<f64>)> {
    let model = CostModel::normalized(share, n_tokens);
    let mut loss = 0.0;
    let mut predicted = Vec::with_capacity(targets.len());
    for (sched, target) in targets {
        let p = schedule_cost(sched, n_tokens, &model, baseline_steps)?.speedup;
        loss += (p / target - 1.0).powi(2);
        predicted.push(p);
    }
    Ok((loss, predicted))
}

/// Least-squares attention share in `[0, 1]` for the normalised two-term
/// model, minimising relative speedup error. A coarse scan brackets the
/// minimum and golden-section search refines it.
pub fn calibrate_attention_share(
    targets: &[(StageSchedule, f64)],
    n_tokens: usize,
    baseline_steps: usize,
) -> Result<Calibration> {
    if targets.is_empty() {
        return Err(JitError::Parameter(
            "calibration needs at least one target".into(),
        ));
    }
    if n_tokens == 0 || baseline_steps == 0 {
        return Err(JitError::Parameter(
            "calibration needs a positive token count and baseline".into(),
        ));
    }
    if let Some((s, t)) = targets.iter().find(|(_, t)| !(t.is_finite() && *t > 0.0)) {
        return Err(JitError::Parameter(format!(
            "target speedup {t} for {:?} is not positive",
            s.name
        )));
    }
    // All-dense targets carry no information about the share.
    if targets
        .iter()
        .all(|(s, _)| s.stages.iter().all(|st| st.sparsity == 1.0))
    {
        return Err(JitError::Parameter(
            "degenerate calibration: every target schedule is dense".into(),
        ));
    }

    const SCAN: usize = 1000;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=SCAN {
        let share = i as f64 / SCAN as f64;
        let (loss, _) = calibration_loss(share, targets, n_tokens, baseline_steps)?;
        if loss < best.0 {
            best = (loss, share);
        }
    }
    let step = 1.0 / SCAN as f64;
    let (mut lo, mut hi) = ((best.1 - step).max(0.0), (best.1 + step).min(1.0));
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let a = hi - golden * (hi - lo);
        let b = lo + golden * (hi - lo);
        let la = calibration_loss(a, targets, n_tokens, baseline_steps)?.0;
        let lb = calibration_loss(b, targets, n_tokens, baseline_steps)?.0;
        if la <= lb {
            hi = b;
        } else {
            lo = a;
        }
    }
    let share = 0.5 * (lo + hi);
    let (_, predicted) = calibration_loss(share, targets, n_tokens, baseline_steps)?;
    let target_values: Vec<f64> = targets.iter().map(|(_, t)| *t).collect();
    let relative_errors = predicted
        .iter()
        .zip(&target_values)
        .map(|(p, t)| p / t - 1.0)
        .collect();
    Ok(Calibration {
        attention_share: share,
        predicted,
        targets: target_values,
        relative_errors,
    })
}
