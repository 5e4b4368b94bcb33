//! Run configuration and its flat `key = value` file format.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::decider::DeciderConfig;
use crate::error::{Error, Result};
use crate::framebuf::{BufferMode, SequenceOrder};
use crate::refiner::{AdaptConfig, LossWeights};
use crate::semmap::{FilterParams, ProjectionParams};
use crate::sensors::{SegNoiseModel, SensorConfig};
use crate::skills::{PlanParams, ScoringParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemanticBackend {
    Gt,
    NoisyRaw,
    Refined,
}

impl SemanticBackend {
    pub fn name(self) -> &'static str {
        match self {
            SemanticBackend::Gt => "gt",
            SemanticBackend::NoisyRaw => "noisy",
            SemanticBackend::Refined => "refined",
        }
    }
}

impl fmt::Display for SemanticBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemanticBackend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gt" => Ok(SemanticBackend::Gt),
            "noisy" => Ok(SemanticBackend::NoisyRaw),
            "refined" => Ok(SemanticBackend::Refined),
            _ => Err(format!("unknown backend '{s}' (expected gt, noisy or refined)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub turn_angle: f64,
    pub backend: SemanticBackend,
    pub buffer: BufferMode,
    pub filter: FilterParams,
    pub projection: ProjectionParams,
    pub noise: SegNoiseModel,
    pub sensor: SensorConfig,
    pub decider: DeciderConfig,
    pub plan: PlanParams,
    pub scoring: ScoringParams,
    /// Steps between replans of the map-based skills.
    pub replan_interval: usize,
    /// Goal-reaching targets are free cells within this distance (m) of a
    /// mapped goal cell.
    pub approach_radius: f64,
    pub patience: usize,
    pub critic_decay: f64,
    pub adapt: AdaptConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            turn_angle: 30.0,
            backend: SemanticBackend::Gt,
            buffer: BufferMode::backward(2),
            filter: FilterParams::default(),
            projection: ProjectionParams::default(),
            noise: SegNoiseModel::default(),
            sensor: SensorConfig::default(),
            decider: DeciderConfig::default(),
            plan: PlanParams::default(),
            scoring: ScoringParams::default(),
            replan_interval: 10,
            approach_radius: 0.6,
            patience: 3,
            critic_decay: 0.95,
            adapt: AdaptConfig::default(),
            seed: 0,
        }
    }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("bad value '{v}' for {key}")))
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::parse(line, format!("bad value '{v}' for {key}"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let v = value;
        match key {
            "turn_angle" => self.turn_angle = num(line, key, v)?,
            "backend" => self.backend = v.parse().map_err(|e: String| Error::parse(line, e))?,
            "buffer_order" => {
                self.buffer.order = match v {
                    "backward" => SequenceOrder::Backward,
                    "forward" => SequenceOrder::Forward,
                    _ => return Err(Error::parse(line, format!("bad buffer_order '{v}'"))),
                }
            }
            "buffer_n" => self.buffer.n = num(line, key, v)?,
            "filter_k" => self.filter.k = num(line, key, v)?,
            "filter_alpha" => self.filter.alpha = num(line, key, v)?,
            "filter_threshold" => self.filter.threshold = num(line, key, v)?,
            "goal_extrusion" => self.projection.goal_extrusion = num(line, key, v)?,
            "noise_p0" => self.noise.p0 = num(line, key, v)?,
            "noise_p1" => self.noise.p1 = num(line, key, v)?,
            "phantom_rate" => self.noise.phantom_rate = num(line, key, v)?,
            "phantom_width" => self.noise.blob_width = num(line, key, v)?,
            "fov" => self.sensor.fov = num(line, key, v)?,
            "n_rays" => self.sensor.n_rays = num(line, key, v)?,
            "max_range" => self.sensor.max_range = num(line, key, v)?,
            "tau" => self.decider.tau = num(line, key, v)?,
            "goal_stop_radius" => self.decider.goal_stop_radius = num(line, key, v)?,
            "success_radius" => self.decider.success_call_radius = num(line, key, v)?,
            "max_steps" => self.decider.max_steps = num(line, key, v)?,
            "inflation" => self.plan.inflation = num(line, key, v)?,
            "clearance" => self.plan.clearance = num(line, key, v)?,
            "clearance_cost" => self.plan.clearance_cost = num(line, key, v)?,
            "unexplored_cost" => self.plan.unexplored_cost = num(line, key, v)?,
            "min_frontier_size" => self.scoring.min_frontier_size = num(line, key, v)?,
            "area_radius" => self.scoring.area_radius = num(line, key, v)?,
            "w_area" => self.scoring.w_area = num(line, key, v)?,
            "w_obj" => self.scoring.w_obj = num(line, key, v)?,
            "replan_interval" => self.replan_interval = num(line, key, v)?,
            "approach_radius" => self.approach_radius = num(line, key, v)?,
            "patience" => self.patience = num(line, key, v)?,
            "critic_decay" => self.critic_decay = num(line, key, v)?,
            "inner_lr" => self.adapt.inner_lr = num(line, key, v)?,
            "outer_lr" => self.adapt.outer_lr = num(line, key, v)?,
            "meta_epochs" => self.adapt.meta_epochs = num(line, key, v)?,
            "batch_size" => self.adapt.batch_size = num(line, key, v)?,
            "second_order" => self.adapt.second_order = boolean(line, key, v)?,
            "val_fraction" => self.adapt.val_fraction = num(line, key, v)?,
            "pretrain_lr" => self.adapt.pretrain_lr = num(line, key, v)?,
            "pretrain_epochs" => self.adapt.pretrain_epochs = num(line, key, v)?,
            "lambda_cls" => self.adapt.weights.cls = num(line, key, v)?,
            "lambda_bce" => self.adapt.weights.bce = num(line, key, v)?,
            "lambda_dice" => self.adapt.weights.dice = num(line, key, v)?,
            "seed" => self.seed = num(line, key, v)?,
            _ => return Err(Error::parse(line, format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
            cfg.set(k.trim(), v.trim(), i + 1)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.turn_angle > 0.0 && self.turn_angle < 180.0) {
            return Err(Error::Config(format!("turn_angle must be in (0, 180), got {}", self.turn_angle)));
        }
        if self.buffer.n == 0 {
            return Err(Error::Config("buffer_n must be at least 1".into()));
        }
        self.filter.validate().map_err(Error::Config)?;
        self.noise.validate().map_err(Error::Config)?;
        self.decider.validate()?;
        if self.sensor.n_rays < 2 || !(self.sensor.max_range > 0.0) || !(self.sensor.fov > 0.0) {
            return Err(Error::Config("sensor needs >= 2 rays, positive fov and range".into()));
        }
        if self.replan_interval == 0 {
            return Err(Error::Config("replan_interval must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.critic_decay) {
            return Err(Error::Config("critic_decay must lie in [0, 1)".into()));
        }
        self.adapt.validate()
    }

    /// Every key with its current value, in the file format.
    pub fn to_text(&self) -> String {
        let order = match self.buffer.order {
            SequenceOrder::Backward => "backward",
            SequenceOrder::Forward => "forward",
        };
        let w: LossWeights = self.adapt.weights;
        let pairs: Vec<(&str, String)> = vec![
            ("turn_angle", self.turn_angle.to_string()),
            ("backend", self.backend.to_string()),
            ("buffer_order", order.to_string()),
            ("buffer_n", self.buffer.n.to_string()),
            ("filter_k", self.filter.k.to_string()),
            ("filter_alpha", self.filter.alpha.to_string()),
            ("filter_threshold", self.filter.threshold.to_string()),
            ("goal_extrusion", self.projection.goal_extrusion.to_string()),
            ("noise_p0", self.noise.p0.to_string()),
            ("noise_p1", self.noise.p1.to_string()),
            ("phantom_rate", self.noise.phantom_rate.to_string()),
            ("phantom_width", self.noise.blob_width.to_string()),
            ("fov", self.sensor.fov.to_string()),
            ("n_rays", self.sensor.n_rays.to_string()),
            ("max_range", self.sensor.max_range.to_string()),
            ("tau", self.decider.tau.to_string()),
            ("goal_stop_radius", self.decider.goal_stop_radius.to_string()),
            ("success_radius", self.decider.success_call_radius.to_string()),
            ("max_steps", self.decider.max_steps.to_string()),
            ("inflation", self.plan.inflation.to_string()),
            ("clearance", self.plan.clearance.to_string()),
            ("clearance_cost", self.plan.clearance_cost.to_string()),
            ("unexplored_cost", self.plan.unexplored_cost.to_string()),
            ("min_frontier_size", self.scoring.min_frontier_size.to_string()),
            ("area_radius", self.scoring.area_radius.to_string()),
            ("w_area", self.scoring.w_area.to_string()),
            ("w_obj", self.scoring.w_obj.to_string()),
            ("replan_interval", self.replan_interval.to_string()),
            ("approach_radius", self.approach_radius.to_string()),
            ("patience", self.patience.to_string()),
            ("critic_decay", self.critic_decay.to_string()),
            ("inner_lr", self.adapt.inner_lr.to_string()),
            ("outer_lr", self.adapt.outer_lr.to_string()),
            ("meta_epochs", self.adapt.meta_epochs.to_string()),
            ("batch_size", self.adapt.batch_size.to_string()),
            ("second_order", self.adapt.second_order.to_string()),
            ("val_fraction", self.adapt.val_fraction.to_string()),
            ("pretrain_lr", self.adapt.pretrain_lr.to_string()),
            ("pretrain_epochs", self.adapt.pretrain_epochs.to_string()),
            ("lambda_cls", w.cls.to_string()),
            ("lambda_bce", w.bce.to_string()),
            ("lambda_dice", w.dice.to_string()),
            ("seed", self.seed.to_string()),
        ];
        let mut s = String::new();
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
