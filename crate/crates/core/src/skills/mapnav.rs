//! Map-based exploration and goal reaching: plan on the global map, then
//! hand the path to the follower, replanning every few steps.

use crate::grid::{Cell, Grid};
use crate::semmap::GlobalSemMap;
use crate::world::{signed_angle, Action, CellClass, Pose};

use super::follow::{follow, forward_blocked, turn_toward, PathFollower, WAYPOINT_REACHED};
use super::frontier::{detect_frontiers, score_frontiers, ScoringParams};
use super::planner::{CostGrid, PlanParams, PlannerPath};

/// How many of the best-scoring frontiers are tried before giving up.
const FRONTIER_CANDIDATES: usize = 5;

fn usable(path: &PlannerPath, map: &GlobalSemMap, pose: Pose) -> Option<PathFollower> {
    let mut f = PathFollower::from_path(path, map);
    f.consume(pose);
    let (x, y) = f.last()?;
    ((x - pose.x).hypot(y - pose.y) > WAYPOINT_REACHED).then_some(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapExplorer {
    replan_interval: usize,
    follower: PathFollower,
    since_plan: usize,
}

impl MapExplorer {
    pub fn new(replan_interval: usize) -> Self {
        Self {
            replan_interval: replan_interval.max(1),
            follower: PathFollower::default(),
            since_plan: 0,
        }
    }

    /// Drops the current path so the next step replans.
    pub fn invalidate(&mut self) {
        self.follower = PathFollower::default();
    }

    fn replan(&mut self, map: &GlobalSemMap, pose: Pose, goal: CellClass, threshold: f64, plan: &PlanParams, scoring: &ScoringParams) {
        self.since_plan = 0;
        self.follower = PathFollower::default();
        let costs = CostGrid::from_map(map, plan);
        let frontiers = detect_frontiers(map, scoring.min_frontier_size);
        let from = map.cell_of(pose.x, pose.y);
        for (f, _) in score_frontiers(map, &costs, frontiers, goal, threshold, scoring)
            .into_iter()
            .take(FRONTIER_CANDIDATES)
        {
            if let Some(follower) = costs.astar(from, f.centroid).and_then(|p| usable(&p, map, pose)) {
                self.follower = follower;
                return;
            }
        }
    }

    /// Next action toward the best reachable frontier; `None` when no
    /// frontier can be reached.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        map: &GlobalSemMap,
        pose: Pose,
        goal: CellClass,
        threshold: f64,
        plan: &PlanParams,
        scoring: &ScoringParams,
        turn_angle: f64,
    ) -> Option<Action> {
        self.follower.consume(pose);
        if self.follower.is_empty() || self.since_plan >= self.replan_interval {
            self.replan(map, pose, goal, threshold, plan, scoring);
        }
        if self.follower.is_empty() {
            return None;
        }
        self.since_plan += 1;
        follow(&mut self.follower, pose, turn_angle, map).ok()
    }
}

/// Meters from the pose to the nearest cell center in `cells`.
pub fn nearest_distance(map: &GlobalSemMap, pose: Pose, cells: &[Cell]) -> Option<f64> {
    cells
        .iter()
        .map(|c| {
            let (x, y) = map.center_of(*c);
            (x - pose.x).hypot(y - pose.y)
        })
        .min_by(f64::total_cmp)
}

/// Drives to a free cell within `approach_radius` of a mapped goal cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalApproach {
    replan_interval: usize,
    approach_radius: f64,
    follower: PathFollower,
    since_plan: usize,
}

impl GoalApproach {
    pub fn new(replan_interval: usize, approach_radius: f64) -> Self {
        Self {
            replan_interval: replan_interval.max(1),
            approach_radius,
            follower: PathFollower::default(),
            since_plan: 0,
        }
    }

    pub fn invalidate(&mut self) {
        self.follower = PathFollower::default();
    }

    fn replan(&mut self, map: &GlobalSemMap, pose: Pose, goal_cells: &[Cell], plan: &PlanParams) {
        self.since_plan = 0;
        let res = map.frame().resolution;
        let reach = (self.approach_radius / res).ceil() as i32;
        let mut targets = Grid::filled(map.width(), map.height(), false);
        for g in goal_cells {
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let c = Cell::new(g.row + dr, g.col + dc);
                    if map.contains(c) && !map.is_obstacle(c) && c.euclid(*g) * res <= self.approach_radius {
                        targets[c] = true;
                    }
                }
            }
        }
        let from = map.cell_of(pose.x, pose.y);
        self.follower = CostGrid::from_map(map, plan)
            .dijkstra_to_any(from, &targets)
            .and_then(|p| usable(&p, map, pose))
            .unwrap_or_default();
    }

    /// Next action toward the goal cells. Without a plan it turns toward the
    /// nearest goal cell and creeps forward when nothing blocks it.
    pub fn step(&mut self, map: &GlobalSemMap, pose: Pose, goal_cells: &[Cell], plan: &PlanParams, turn_angle: f64) -> Action {
        self.follower.consume(pose);
        if self.follower.is_empty() || self.since_plan >= self.replan_interval {
            self.replan(map, pose, goal_cells, plan);
        }
        self.since_plan += 1;
        if !self.follower.is_empty() {
            if let Ok(a) = follow(&mut self.follower, pose, turn_angle, map) {
                return a;
            }
        }
        let nearest = goal_cells.iter().copied().min_by(|a, b| {
            let d = |c: &Cell| {
                let (x, y) = map.center_of(*c);
                (x - pose.x).hypot(y - pose.y)
            };
            d(a).total_cmp(&d(b)).then_with(|| a.cmp(b))
        });
        let Some(c) = nearest else {
            return Action::TurnLeft;
        };
        let (x, y) = map.center_of(c);
        let err = signed_angle(pose.heading, (y - pose.y).atan2(x - pose.x).to_degrees());
        if err.abs() > turn_angle / 2.0 || forward_blocked(map, pose) {
            turn_toward(err)
        } else {
            Action::Forward
        }
    }
}
