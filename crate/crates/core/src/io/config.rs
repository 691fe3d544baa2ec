//! JSON run configuration.
//!
//! ```json
//! {
//!   "preset": "jit4x",
//!   "shape": [32, 32, 4],
//!   "field": { "kind": "gaussian-bump", "sigma1": 0.0 },
//!   "seed": 7
//! }
//! ```
//!
//! Instead of `preset`, a `schedule` object may give `stages`
//! (`[{ "steps": 7, "sparsity": 0.35 }, ...]`) plus optional `alpha`,
//! `beta` and `name`. Unknown keys are reported as warnings, missing
//! required keys as errors naming the key.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cost::{CostModel, DEFAULT_BASELINE_STEPS};
use crate::error::{JitError, Result};
use crate::grid::GridShape;
use crate::sampler::{NoiseMode, RunOptions};
use crate::schedule::{build_schedule, preset, StageSchedule, StageSpec, JIT_ALPHA, JIT_BETA};
use crate::toy::{default_bump_width, make_target_image, GaussianFlowField, TargetImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineSchedule {
    #[serde(default = "default_schedule_name")]
    pub name: String,
    pub stages: Vec<StageSpec>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_schedule_name() -> String {
    "custom".into()
}

fn default_alpha() -> f64 {
    JIT_ALPHA
}

fn default_beta() -> f64 {
    JIT_BETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub kind: String,
    #[serde(default)]
    pub sigma1: f64,
    /// Bump width in tokens (gaussian-bump).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Value range (smooth-gradient).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f32>,
    /// Block size (checkerboard).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<usize>,
}

impl FieldSpec {
    pub fn target(&self, shape: GridShape) -> Result<TargetImage> {
        Ok(match TargetImage::parse(&self.kind, shape)? {
            TargetImage::SmoothGradient { lo, hi } => TargetImage::SmoothGradient {
                lo: self.lo.unwrap_or(lo),
                hi: self.hi.unwrap_or(hi),
            },
            TargetImage::Checkerboard { cell } => TargetImage::Checkerboard {
                cell: self.cell.unwrap_or(cell),
            },
            TargetImage::GaussianBump { .. } => TargetImage::GaussianBump {
                width: self.width.unwrap_or_else(|| default_bump_width(shape)),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfigOptions {
    /// Mirror the Beta timestep warp.
    #[serde(default)]
    pub invert_time: bool,
    /// Reuse one noise draw for every transition.
    #[serde(default)]
    pub shared_noise: bool,
    #[serde(default)]
    pub trajectory_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<InlineSchedule>,
    pub shape: [usize; 3],
    pub field: FieldSpec,
    pub seed: u64,
    #[serde(default)]
    pub options: ConfigOptions,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default = "default_baseline_steps")]
    pub baseline_steps: usize,
}

/// Largest grid a config may request, in f32 values.
pub const MAX_GRID_VALUES: usize = 1 << 28;

fn default_baseline_steps() -> usize {
    DEFAULT_BASELINE_STEPS
}

const TOP_KEYS: &[&str] = &[
    "preset",
    "schedule",
    "shape",
    "field",
    "seed",
    "options",
    "cost",
    "baseline_steps",
];
const SCHEDULE_KEYS: &[&str] = &["name", "stages", "alpha", "beta"];
const FIELD_KEYS: &[&str] = &["kind", "sigma1", "width", "lo", "hi", "cell"];
const OPTION_KEYS: &[&str] = &["invert_time", "shared_noise", "trajectory_stride"];
const COST_KEYS: &[&str] = &["c_attn", "c_lin", "c_fix", "n_ctx"];

fn unknown_keys(value: &Value, known: &[&str], prefix: &str, warnings: &mut Vec<String>) {
    if let Value::Object(map) = value {
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                warnings.push(format!("unknown key {prefix}{key}"));
            }
        }
    }
}

/// Parses a config document, returning it with any unknown-key warnings.
pub fn parse_config(text: &str) -> Result<(RunConfig, Vec<String>)> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(map) = &value else {
        return Err(JitError::Config("config must be a JSON object".into()));
    };
    for key in ["seed", "shape", "field"] {
        if !map.contains_key(key) {
            return Err(JitError::Config(format!("missing required key \"{key}\"")));
        }
    }
    match (map.contains_key("preset"), map.contains_key("schedule")) {
        (false, false) => {
            return Err(JitError::Config(
                "missing required key \"preset\" (or \"schedule\")".into(),
            ))
        }
        (true, true) => {
            return Err(JitError::Config(
                "give either \"preset\" or \"schedule\", not both".into(),
            ))
        }
        _ => {}
    }
    if let Some(field) = map.get("field") {
        if field.get("kind").is_none() {
            return Err(JitError::Config(
                "missing required key \"field.kind\"".into(),
            ));
        }
    }
    if let Some(sched) = map.get("schedule") {
        if sched.get("stages").is_none() {
            return Err(JitError::Config(
                "missing required key \"schedule.stages\"".into(),
            ));
        }
    }

    let mut warnings = Vec::new();
    unknown_keys(&value, TOP_KEYS, "", &mut warnings);
    let nested = [
        ("schedule", SCHEDULE_KEYS),
        ("field", FIELD_KEYS),
        ("options", OPTION_KEYS),
        ("cost", COST_KEYS),
    ];
    for (name, keys) in nested {
        if let Some(v) = map.get(name) {
            unknown_keys(v, keys, &format!("{name}."), &mut warnings);
        }
    }

    let config: RunConfig =
        serde_json::from_value(value).map_err(|e| JitError::Config(e.to_string()))?;
    config.shape()?;
    config.cost.validate()?;
    Ok((config, warnings))
}

pub fn read_config(path: &Path) -> Result<(RunConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| JitError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn config_to_string(config: &RunConfig) -> Result<String> {
    let mut s = serde_json::to_string_pretty(config)?;
    s.push('\n');
    Ok(s)
}

pub fn write_config(path: &Path, config: &RunConfig) -> Result<()> {
    super::write_atomic(path, config_to_string(config)?.as_bytes())
}

impl RunConfig {
    /// Minimal config for a preset on a gaussian-bump target.
    pub fn for_preset(preset: &str, shape: [usize; 3], seed: u64) -> Self {
        Self {
            preset: Some(preset.into()),
            schedule: None,
            shape,
            field: FieldSpec {
                kind: "gaussian-bump".into(),
                sigma1: 0.0,
                width: None,
                lo: None,
                hi: None,
                cell: None,
            },
            seed,
            options: ConfigOptions::default(),
            cost: CostModel::default(),
            baseline_steps: DEFAULT_BASELINE_STEPS,
        }
    }

    pub fn shape(&self) -> Result<GridShape> {
        let [h, w, d] = self.shape;
        let shape = GridShape::new(h, w, d).map_err(|e| JitError::Config(format!("shape: {e}")))?;
        if shape.len() > MAX_GRID_VALUES {
            return Err(JitError::Config(format!(
                "shape: {h}x{w}x{d} exceeds the {MAX_GRID_VALUES}-value limit"
            )));
        }
        Ok(shape)
    }

    pub fn build_schedule(&self) -> Result<StageSchedule> {
        let invert = self.options.invert_time;
        match (&self.preset, &self.schedule) {
            (Some(name), None) => preset(name, invert),
            (None, Some(inline)) => {
                let n = inline.stages.iter().map(|s| s.steps).sum();
                build_schedule(
                    &inline.name,
                    &inline.stages,
                    n,
                    inline.alpha,
                    inline.beta,
                    invert,
                )
            }
            _ => Err(JitError::Config(
                "exactly one of \"preset\" and \"schedule\" is required".into(),
            )),
        }
    }

    pub fn build_field(&self) -> Result<GaussianFlowField> {
        let shape = self.shape()?;
        let mu = make_target_image(self.field.target(shape)?, shape)?;
        GaussianFlowField::with_uniform_sigma(mu, self.field.sigma1)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            noise_mode: if self.options.shared_noise {
                NoiseMode::Shared
            } else {
                NoiseMode::Fresh
            },
            trajectory_stride: self.options.trajectory_stride,
            cost_model: self.cost,
            baseline_steps: self.baseline_steps,
        }
    }
}
