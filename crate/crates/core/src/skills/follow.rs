use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::semmap::GlobalSemMap;
use crate::world::{signed_angle, Action, Pose, FORWARD_STEP};

use super::planner::PlannerPath;

/// Waypoints closer than this are considered reached.
pub const WAYPOINT_REACHED: f64 = 0.15;
/// Farthest waypoint the follower steers at directly.
pub const LOOKAHEAD: f64 = 0.5;

/// Remaining waypoints of a planned path, in world coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathFollower {
    waypoints: VecDeque<(f64, f64)>,
}

impl PathFollower {
    pub fn from_path(path: &PlannerPath, map: &GlobalSemMap) -> Self {
        Self {
            waypoints: path.cells.iter().map(|c| map.center_of(*c)).collect(),
        }
    }

    pub fn from_points(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self {
            waypoints: points.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        self.waypoints.back().copied()
    }

    /// Drops leading waypoints within reach of the pose.
    pub fn consume(&mut self, pose: Pose) {
        while let Some(&(x, y)) = self.waypoints.front() {
            if (x - pose.x).hypot(y - pose.y) <= WAYPOINT_REACHED {
                self.waypoints.pop_front();
            } else {
                break;
            }
        }
    }
}

fn segment_hits_obstacle(map: &GlobalSemMap, x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
    let len = (x1 - x0).hypot(y1 - y0);
    let n = ((len / (map.frame().resolution * 0.5)).ceil() as usize).max(1);
    (1..=n).any(|i| {
        let t = i as f64 / n as f64;
        map.is_obstacle(map.cell_of(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t))
    })
}

/// True when a Forward step from `pose` would enter a known obstacle.
pub fn forward_blocked(map: &GlobalSemMap, pose: Pose) -> bool {
    let (s, c) = pose.heading.to_radians().sin_cos();
    segment_hits_obstacle(map, pose.x, pose.y, pose.x + c * FORWARD_STEP, pose.y + s * FORWARD_STEP)
}

/// Turn toward `err` (degrees, counter-clockwise positive); a half-turn
/// resolves to the left.
pub fn turn_toward(err: f64) -> Action {
    if err >= 0.0 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Next action along the path: turn while the bearing error to the target
/// waypoint exceeds half a turn, otherwise Forward unless a known obstacle
/// is in the way.
pub fn follow(follower: &mut PathFollower, pose: Pose, turn_angle: f64, map: &GlobalSemMap) -> Result<Action> {
    follower.consume(pose);
    if follower.is_empty() {
        return Err(Error::Contract("follow called with an empty path".into()));
    }
    let mut target = follower.waypoints[0];
    for &(x, y) in follower.waypoints.iter().skip(1) {
        if (x - pose.x).hypot(y - pose.y) > LOOKAHEAD || segment_hits_obstacle(map, pose.x, pose.y, x, y) {
            break;
        }
        target = (x, y);
    }
    let bearing = (target.1 - pose.y).atan2(target.0 - pose.x).to_degrees();
    let err = signed_angle(pose.heading, bearing);
    if err.abs() > turn_angle / 2.0 {
        return Ok(turn_toward(err));
    }
    if forward_blocked(map, pose) {
        return Ok(turn_toward(err));
    }
    Ok(Action::Forward)
}
