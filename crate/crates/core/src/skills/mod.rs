//! Navigation skills: frontier exploration with a potential function, A*
//! planning with a path follower, and scripted stand-ins for the learned
//! exploration and goal-reaching policies.

pub mod follow;
pub mod frontier;
pub mod mapnav;
pub mod planner;
pub mod surrogate;

pub use follow::{follow, PathFollower};
pub use frontier::{detect_frontiers, score_frontiers, Frontier, PotentialScore, ScoringParams};
pub use mapnav::{nearest_distance, GoalApproach, MapExplorer};
pub use planner::{plan_astar, plan_to_any, PlanParams, PlannerPath};
pub use surrogate::{rl_explore_step, CriticState, GoalReachOutput, LearnedGoalReacher};
