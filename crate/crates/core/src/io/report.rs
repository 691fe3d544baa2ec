//! Run reports (JSON) and per-step / cost metrics (CSV).

use std::fmt::Write as _;
use std::path::Path;

use crate::cost::{CostModel, ScheduleCost};
use crate::error::Result;
use crate::sampler::RunReport;
use crate::schedule::StageSchedule;

pub fn report_to_string(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    super::write_atomic(path, report_to_string(report)?.as_bytes())
}

/// `step,t,stage,m_k,cost`, one row per solver step.
pub fn steps_csv(report: &RunReport) -> String {
    let mut out = String::from("step,t,stage,m_k,cost\n");
    for s in &report.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.step, s.t, s.stage, s.active, s.cost
        );
    }
    out
}

pub fn write_steps_csv(path: &Path, report: &RunReport) -> Result<()> {
    super::write_atomic(path, steps_csv(report).as_bytes())
}

/// Timestep table: `step,t,stage,sparsity,m_k,transition`.
pub fn schedule_csv(schedule: &StageSchedule, n_tokens: usize) -> Result<String> {
    let budgets = schedule.budgets(n_tokens)?;
    let mut out = String::from("step,t,stage,sparsity,m_k,transition\n");
    for (i, t) in schedule.timesteps.iter().enumerate() {
        if i == schedule.n_steps() {
            let _ = writeln!(out, "{i},{t},,,,");
            break;
        }
        let pos = schedule.stage_of_step(i);
        let _ = writeln!(
            out,
            "{i},{t},{},{},{},{}",
            schedule.stage_label(pos),
            schedule.stages[pos].sparsity,
            budgets[pos],
            u8::from(schedule.transition_steps.contains(&i))
        );
    }
    Ok(out)
}

pub const COST_CSV_HEADER: &str = "schedule,c_attn,c_lin,c_fix,n_ctx,total,speedup";

pub fn cost_csv_row(name: &str, model: &CostModel, cost: &ScheduleCost) -> String {
    format!(
        "{name},{},{},{},{},{},{}",
        model.c_attn, model.c_lin, model.c_fix, model.n_ctx, cost.total, cost.speedup
    )
}
