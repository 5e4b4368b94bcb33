//! Scripted stand-ins for the learned exploration and goal-reaching
//! policies. The explorer exposes a critic-like score derived from recent
//! exploration progress.

use rand::Rng;

use crate::sensors::{DepthScan, SemScan};
use crate::world::{signed_angle, Action, CellClass};

use super::follow::turn_toward;

/// Central depth below which the wanderer turns instead of moving.
pub const CLEARANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticState {
    pub ema_gain: f64,
    pub running_max: f64,
    pub decay: f64,
}

impl Default for CriticState {
    fn default() -> Self {
        Self {
            ema_gain: 0.0,
            running_max: 0.0,
            decay: 0.95,
        }
    }
}

impl CriticState {
    pub fn new(decay: f64) -> Self {
        Self {
            decay,
            ..Self::default()
        }
    }

    /// Folds in this step's count of newly explored cells.
    pub fn update(&mut self, new_cells: usize) -> f64 {
        self.ema_gain = self.decay * self.ema_gain + (1.0 - self.decay) * new_cells as f64;
        self.running_max = self.running_max.max(self.ema_gain);
        self.score()
    }

    /// `ema_gain / running_max` in [0, 1]; 0 before any progress.
    pub fn score(&self) -> f64 {
        if self.running_max > 0.0 {
            (self.ema_gain / self.running_max).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

fn central_clearance(depth: &DepthScan) -> f64 {
    let n = depth.len();
    let half = (n / 16).max(1);
    let mid = n / 2;
    depth.ranges[mid.saturating_sub(half)..(mid + half).min(n)]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Wall-avoiding wanderer: Forward while the centre of the scan is clear,
/// otherwise turn toward the deeper half. A small share of clear steps turn
/// at random so the agent does not trace the same loop forever.
pub fn rl_explore_step<R: Rng + ?Sized>(
    depth: &DepthScan,
    critic: &mut CriticState,
    new_cells: usize,
    rng: &mut R,
) -> (Action, f64) {
    let score = critic.update(new_cells);
    let wander: f64 = rng.gen();
    let action = if central_clearance(depth) > CLEARANCE {
        if wander < 0.05 {
            Action::TurnLeft
        } else if wander < 0.1 {
            Action::TurnRight
        } else {
            Action::Forward
        }
    } else {
        // Ray 0 is the rightmost.
        let n = depth.len();
        let right = mean(&depth.ranges[..n / 2]);
        let left = mean(&depth.ranges[n / 2..]);
        if left >= right {
            Action::TurnLeft
        } else {
            Action::TurnRight
        }
    };
    (action, score)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoalReachOutput {
    Act(Action),
    NotSure,
}

/// Steers at the goal-labelled rays; gives up with `NotSure` once they have
/// been missing for `patience` consecutive calls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnedGoalReacher {
    pub patience: usize,
    missing: usize,
}

impl Default for LearnedGoalReacher {
    fn default() -> Self {
        Self::new(3)
    }
}

impl LearnedGoalReacher {
    pub fn new(patience: usize) -> Self {
        Self { patience, missing: 0 }
    }

    pub fn reset(&mut self) {
        self.missing = 0;
    }

    pub fn step(&mut self, depth: &DepthScan, sem: &SemScan, heading: f64, goal: CellClass, turn_angle: f64) -> GoalReachOutput {
        let bearings: Vec<f64> = (0..sem.labels.len())
            .filter(|&i| sem.labels[i] == goal)
            .map(|i| signed_angle(heading, depth.bearing(heading, i)))
            .collect();
        if bearings.is_empty() {
            self.missing += 1;
            return if self.missing >= self.patience {
                GoalReachOutput::NotSure
            } else {
                GoalReachOutput::Act(Action::Forward)
            };
        }
        self.missing = 0;
        let err = mean(&bearings);
        if err.abs() > turn_angle / 2.0 {
            GoalReachOutput::Act(turn_toward(err))
        } else {
            GoalReachOutput::Act(Action::Forward)
        }
    }
}
