//! Skill-fusion state machine: explore until the goal shows up, reach it
//! with the learned surrogate while only seen, and with the planner once
//! mapped.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::semmap::{goal_cells, GlobalSemMap};
use crate::sensors::SemScan;
use crate::skills::GoalReachOutput;
use crate::world::{Action, CellClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NavPhase {
    Exploration,
    GoalReachLearned,
    GoalReachMapped,
}

impl NavPhase {
    pub fn name(self) -> &'static str {
        match self {
            NavPhase::Exploration => "explore",
            NavPhase::GoalReachLearned => "reach_learned",
            NavPhase::GoalReachMapped => "reach_mapped",
        }
    }
}

impl fmt::Display for NavPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NavPhase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "explore" => Ok(NavPhase::Exploration),
            "reach_learned" => Ok(NavPhase::GoalReachLearned),
            "reach_mapped" => Ok(NavPhase::GoalReachMapped),
            _ => Err(format!("unknown phase '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeciderConfig {
    pub tau: f64,
    pub goal_stop_radius: f64,
    pub success_call_radius: f64,
    pub max_steps: usize,
}

impl Default for DeciderConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            goal_stop_radius: 0.84,
            success_call_radius: 1.0,
            max_steps: 500,
        }
    }
}

impl DeciderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config("tau must lie in [0, 1]".into()));
        }
        if !(self.goal_stop_radius > 0.0 && self.success_call_radius > 0.0) {
            return Err(Error::Config("radii must be positive".into()));
        }
        Ok(())
    }
}

/// What the decider looks at each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    pub goal_mapped: bool,
    pub goal_in_view: bool,
    /// The learned goal reacher gave up on the previous step.
    pub not_sure: bool,
}

impl Evidence {
    pub fn gather(map: &GlobalSemMap, sem: &SemScan, goal: CellClass, threshold: f64, not_sure: bool) -> Self {
        Self {
            goal_mapped: !goal_cells(map, goal, threshold).is_empty(),
            goal_in_view: sem.contains(goal),
            not_sure,
        }
    }
}

/// Mapped evidence dominates; otherwise a goal in view starts the learned
/// reacher, which hands back to exploration once it is not sure.
pub fn transition(phase: NavPhase, ev: Evidence) -> NavPhase {
    if ev.goal_mapped {
        return NavPhase::GoalReachMapped;
    }
    match phase {
        NavPhase::Exploration if ev.goal_in_view => NavPhase::GoalReachLearned,
        NavPhase::Exploration => NavPhase::Exploration,
        NavPhase::GoalReachLearned if ev.not_sure => NavPhase::Exploration,
        NavPhase::GoalReachLearned => NavPhase::GoalReachLearned,
        NavPhase::GoalReachMapped => NavPhase::Exploration,
    }
}

pub fn decide_transition(
    phase: NavPhase,
    map: &GlobalSemMap,
    sem: &SemScan,
    goal: CellClass,
    threshold: f64,
    not_sure: bool,
) -> NavPhase {
    transition(phase, Evidence::gather(map, sem, goal, threshold, not_sure))
}

/// Proposals of the skills relevant to the active phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SkillOutputs {
    pub learned_explore: Option<Action>,
    pub map_explore: Option<Action>,
    pub learned_goal: Option<GoalReachOutput>,
    pub mapped_goal: Option<Action>,
    /// Meters from the agent to the nearest mapped goal cell.
    pub goal_distance: Option<f64>,
}

pub fn select_action(phase: NavPhase, critic: f64, cfg: &DeciderConfig, out: &SkillOutputs) -> Result<Action> {
    let missing = |what: &str| Error::Contract(format!("{what} output missing in phase {phase}"));
    match phase {
        NavPhase::Exploration => {
            let (first, second) = if critic > cfg.tau {
                (out.learned_explore, out.map_explore)
            } else {
                (out.map_explore, out.learned_explore)
            };
            first.or(second).ok_or_else(|| missing("exploration"))
        }
        NavPhase::GoalReachLearned => match out.learned_goal {
            Some(GoalReachOutput::Act(a)) => Ok(a),
            Some(GoalReachOutput::NotSure) => out.learned_explore.ok_or_else(|| missing("exploration")),
            None => Err(missing("learned goal reacher")),
        },
        NavPhase::GoalReachMapped => {
            if out.goal_distance.is_some_and(|d| d <= cfg.goal_stop_radius) {
                return Ok(Action::CallStop);
            }
            out.mapped_goal.ok_or_else(|| missing("mapped goal reacher"))
        }
    }
}
