//! One navigation episode: perception, map building, skill fusion and
//! metrics. Replay of a recorded transcript reuses the same perception path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decider::{decide_transition, select_action, NavPhase, SkillOutputs};
use crate::error::{Error, Result};
use crate::framebuf::{FrameBuffer, FrameRecord};
use crate::grid::{Cell, Frame};
use crate::metrics::{eval_map, EpisodeResult, MapEvalResult};
use crate::refiner::{predict, Checkpoint};
use crate::semmap::{goal_cells, integrate, update_occupancy_in_place, FilterParams, GlobalSemMap, MapGeometry};
use crate::sensors::{corrupt_semantics, observe, DepthScan, SemScan};
use crate::skills::{
    nearest_distance, rl_explore_step, CriticState, GoalApproach, GoalReachOutput, LearnedGoalReacher, MapExplorer,
};
use crate::world::{step, Action, AgentState, CellClass, EpisodeSpec, GeodesicField, Pose, Scene, FORWARD_STEP};

use super::config::{RunConfig, SemanticBackend};
use super::transcript::{Transcript, TranscriptRow};

/// Cells of slack around the scene in the agent's map.
const MAP_MARGIN: usize = 16;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed derivation: the result depends only on `base` and
/// the key path, so adding keys elsewhere never shifts existing streams.
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(splitmix64(base), |acc, k| splitmix64(acc ^ splitmix64(*k)))
}

const NOISE_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;

#[derive(Clone, Debug)]
pub struct EpisodeOutput {
    pub result: EpisodeResult,
    pub map_eval: MapEvalResult,
    pub transcript: Transcript,
    pub map: GlobalSemMap,
}

fn scene_map(scene: &Scene) -> GlobalSemMap {
    let res = scene.resolution();
    let m = MAP_MARGIN as f64 * res;
    GlobalSemMap::new(MapGeometry::new(
        Frame::new(-m, -m, res),
        scene.width() + 2 * MAP_MARGIN,
        scene.height() + 2 * MAP_MARGIN,
    ))
}

/// What the policy sees this step.
struct Sensed {
    depth: DepthScan,
    /// Semantics attached to the map this step (delayed in forward mode).
    view_depth: DepthScan,
    view_sem: SemScan,
    new_cells: usize,
}

/// Sensing and map building, shared by live episodes and replays.
pub struct Perception<'a> {
    cfg: &'a RunConfig,
    filter: FilterParams,
    model: Option<&'a Checkpoint>,
    map: GlobalSemMap,
    gt_map: GlobalSemMap,
    buffer: FrameBuffer,
    noise_rng: ChaCha8Rng,
}

impl<'a> Perception<'a> {
    pub fn new(scene: &Scene, cfg: &'a RunConfig, filter: FilterParams, model: Option<&'a Checkpoint>, seed: u64) -> Result<Self> {
        if cfg.backend == SemanticBackend::Refined && model.is_none() {
            return Err(Error::Config("the refined backend needs a checkpoint".into()));
        }
        Ok(Self {
            cfg,
            filter,
            model,
            map: scene_map(scene),
            gt_map: scene_map(scene),
            buffer: FrameBuffer::new(cfg.buffer),
            noise_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, &[NOISE_STREAM])),
        })
    }

    pub fn map(&self) -> &GlobalSemMap {
        &self.map
    }

    fn sense(&mut self, scene: &Scene, pose: Pose, t: usize) -> Result<Sensed> {
        let cfg = self.cfg;
        let (depth, gt_sem) = observe(scene, pose, &cfg.sensor);
        // Drawn for every backend so all backends see the same noise stream.
        let noisy = corrupt_semantics(&gt_sem, &depth, &cfg.noise, &mut self.noise_rng);

        let before = self.map.explored_count();
        update_occupancy_in_place(&mut self.map, pose, &depth);
        let new_cells = self.map.explored_count().saturating_sub(before);
        update_occupancy_in_place(&mut self.gt_map, pose, &depth);
        integrate(&mut self.gt_map, pose, &depth, &gt_sem, &FilterParams::unfiltered(self.filter.alpha), &cfg.projection)?;

        let attached = match cfg.backend {
            SemanticBackend::Gt => Some((pose, depth.clone(), gt_sem)),
            SemanticBackend::NoisyRaw => Some((pose, depth.clone(), noisy)),
            SemanticBackend::Refined => {
                let model = self.model.expect("checked at construction");
                match self.buffer.push(FrameRecord::new(t, pose, depth.clone(), noisy))? {
                    Some(seq) => {
                        let sem = predict(&model.theta, &model.phi, &seq.features(), cfg.adapt.inner_lr)?;
                        let target = seq.target();
                        Some((target.pose, target.depth.clone(), sem))
                    }
                    None => None,
                }
            }
        };
        let (view_depth, view_sem) = match attached {
            Some((p, d, s)) => {
                integrate(&mut self.map, p, &d, &s, &self.filter, &cfg.projection)?;
                (d, s)
            }
            None => (
                depth.clone(),
                SemScan {
                    labels: vec![CellClass::Free; depth.len()],
                },
            ),
        };
        Ok(Sensed {
            depth,
            view_depth,
            view_sem,
            new_cells,
        })
    }

    /// Records a collision: the first blocked point of the attempted step
    /// becomes an obstacle.
    fn bump(&mut self, scene: &Scene, pose: Pose) {
        let (s, c) = pose.heading.to_radians().sin_cos();
        let n = 10;
        for i in 1..=n {
            let t = FORWARD_STEP * i as f64 / n as f64;
            let (x, y) = (pose.x + c * t, pose.y + s * t);
            if !scene.is_free_point(x, y) {
                // The point may sit on a cell boundary, where the scene and
                // the offset map frame can round differently; mark every
                // cell it touches.
                for (dx, dy) in [(-1e-6, -1e-6), (-1e-6, 1e-6), (1e-6, -1e-6), (1e-6, 1e-6)] {
                    let cell = self.map.cell_of(x + dx, y + dy);
                    if self.map.contains(cell) {
                        self.map.set_cell_state(cell, true);
                    }
                }
                return;
            }
        }
    }

    /// Predicted and ground-truth goal cells compared in the ground-truth
    /// map's frame.
    pub fn evaluate(&self, goal: CellClass) -> MapEvalResult {
        let pred: Vec<Cell> = goal_cells(&self.map, goal, self.filter.threshold)
            .into_iter()
            .map(|c| {
                let (x, y) = self.map.center_of(c);
                self.gt_map.cell_of(x, y)
            })
            .collect();
        let gt = goal_cells(&self.gt_map, goal, 0.0);
        eval_map(&pred, &gt, self.map.frame().resolution)
    }
}

fn nav_result(scene: &Scene, ep: &EpisodeSpec, cfg: &RunConfig, state: &AgentState, called_stop: bool) -> EpisodeResult {
    let field = GeodesicField::new(scene, ep.goal, cfg.decider.success_call_radius);
    let initial = field.distance(ep.start.x, ep.start.y);
    let final_dist = field.distance(state.x, state.y);
    let success = called_stop
        && scene
            .distance_to_class(state.x, state.y, ep.goal)
            .is_some_and(|d| d <= cfg.decider.success_call_radius);
    EpisodeResult {
        success,
        path_length: state.path_length,
        optimal_length: ep.optimal_length.or(initial),
        initial_dist: initial,
        final_dist,
        steps: state.steps_taken,
        called_stop,
    }
}

/// Runs one episode. `seed` fixes both the noise and the policy streams.
pub fn run_episode(scene: &Scene, ep: &EpisodeSpec, cfg: &RunConfig, model: Option<&Checkpoint>, seed: u64) -> Result<EpisodeOutput> {
    cfg.validate()?;
    let mut perception = Perception::new(scene, cfg, cfg.filter, model, seed)?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[POLICY_STREAM]));
    let mut critic = CriticState::new(cfg.critic_decay);
    let mut reacher = LearnedGoalReacher::new(cfg.patience);
    let mut explorer = MapExplorer::new(cfg.replan_interval);
    let mut approach = GoalApproach::new(cfg.replan_interval, cfg.approach_radius);
    let mut transcript = Transcript::new(ep.scene.clone(), ep.start, ep.goal, seed);
    let threshold = cfg.filter.threshold;

    let mut state = AgentState::at(ep.start);
    let mut phase = NavPhase::Exploration;
    let mut not_sure = false;
    let mut called_stop = false;

    for t in 0..cfg.decider.max_steps {
        let pose = state.pose();
        let sensed = perception.sense(scene, pose, t)?;
        let (learned_explore, score) = rl_explore_step(&sensed.depth, &mut critic, sensed.new_cells, &mut policy_rng);

        let next = decide_transition(phase, &perception.map, &sensed.view_sem, ep.goal, threshold, not_sure);
        if next != phase {
            match next {
                NavPhase::GoalReachLearned => reacher.reset(),
                NavPhase::GoalReachMapped => approach.invalidate(),
                NavPhase::Exploration => explorer.invalidate(),
            }
        }
        phase = next;
        not_sure = false;

        let mut out = SkillOutputs {
            learned_explore: Some(learned_explore),
            ..SkillOutputs::default()
        };
        let mut goal_count = 0;
        match phase {
            NavPhase::Exploration => {
                if score <= cfg.decider.tau {
                    out.map_explore =
                        explorer.step(&perception.map, pose, ep.goal, threshold, &cfg.plan, &cfg.scoring, cfg.turn_angle);
                }
            }
            NavPhase::GoalReachLearned => {
                let g = reacher.step(&sensed.view_depth, &sensed.view_sem, pose.heading, ep.goal, cfg.turn_angle);
                not_sure = g == GoalReachOutput::NotSure;
                out.learned_goal = Some(g);
            }
            NavPhase::GoalReachMapped => {
                let cells = goal_cells(&perception.map, ep.goal, threshold);
                goal_count = cells.len();
                out.goal_distance = nearest_distance(&perception.map, pose, &cells);
                out.mapped_goal = Some(approach.step(&perception.map, pose, &cells, &cfg.plan, cfg.turn_angle));
            }
        }
        let action = select_action(phase, score, &cfg.decider, &out)?;
        transcript.rows.push(TranscriptRow {
            step: t,
            phase,
            action,
            critic: score,
            goal_cells: goal_count,
        });

        let prev = state;
        state = step(scene, &state, action, cfg.turn_angle);
        if action == Action::CallStop {
            called_stop = true;
            break;
        }
        if action == Action::Forward && state.x == prev.x && state.y == prev.y {
            perception.bump(scene, pose);
            explorer.invalidate();
            approach.invalidate();
        }
    }

    Ok(EpisodeOutput {
        result: nav_result(scene, ep, cfg, &state, called_stop),
        map_eval: perception.evaluate(ep.goal),
        transcript,
        map: perception.map,
    })
}

/// Rebuilds the maps along a recorded action sequence and scores them with
/// `filter`. The noise stream is re-derived from the transcript seed, so the
/// observations match the original run.
pub fn replay_map(
    scene: &Scene,
    transcript: &Transcript,
    cfg: &RunConfig,
    filter: FilterParams,
    model: Option<&Checkpoint>,
) -> Result<MapEvalResult> {
    let mut perception = Perception::new(scene, cfg, filter, model, transcript.seed)?;
    let mut state = AgentState::at(transcript.start);
    for (t, row) in transcript.rows.iter().enumerate() {
        let pose = state.pose();
        perception.sense(scene, pose, t)?;
        let prev = state;
        state = step(scene, &state, row.action, cfg.turn_angle);
        if row.action == Action::CallStop {
            break;
        }
        if row.action == Action::Forward && state.x == prev.x && state.y == prev.y {
            perception.bump(scene, pose);
        }
    }
    Ok(perception.evaluate(transcript.goal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_scene;

    fn corridor() -> Scene {
        let mut rows = vec!["#".repeat(80)];
        for r in 1..19 {
            let mut row: Vec<char> = std::iter::once('#').chain(std::iter::repeat_n('.', 78)).chain(std::iter::once('#')).collect();
            if (8..12).contains(&r) {
                for c in row.iter_mut().take(64).skip(58) {
                    *c = 'c';
                }
            }
            rows.push(row.into_iter().collect());
        }
        rows.push("#".repeat(80));
        load_scene(&format!("80 20 0.05\n{}\n", rows.join("\n"))).unwrap()
    }

    fn spec(goal: CellClass) -> EpisodeSpec {
        EpisodeSpec {
            scene: "corridor".into(),
            start: Pose::new(1.0, 0.5, 0.0),
            goal,
            optimal_length: None,
        }
    }

    #[test]
    fn visible_goal_is_reached_quickly() {
        let scene = corridor();
        let out = run_episode(&scene, &spec(CellClass::Chair), &RunConfig::default(), None, 7).unwrap();
        assert!(out.result.success, "{:?}\n{}", out.result, out.transcript.to_text());
        assert!(out.result.steps <= 15, "{}", out.result.steps);
        assert_eq!(out.transcript.actions().last(), Some(&Action::CallStop));
    }

    #[test]
    fn absent_goal_fails_with_empty_ground_truth() {
        let scene = corridor();
        let mut cfg = RunConfig::default();
        cfg.decider.max_steps = 60;
        let out = run_episode(&scene, &spec(CellClass::Bed), &cfg, None, 7).unwrap();
        assert!(!out.result.success);
        assert_eq!(out.result.optimal_length, None);
        assert!(!out.map_eval.missed);
        assert!(out.transcript.rows.len() <= 60);
    }

    #[test]
    fn same_seed_same_transcript() {
        let scene = corridor();
        let mut cfg = RunConfig::default();
        cfg.backend = SemanticBackend::NoisyRaw;
        cfg.decider.max_steps = 80;
        let a = run_episode(&scene, &spec(CellClass::Sofa), &cfg, None, 3).unwrap();
        let b = run_episode(&scene, &spec(CellClass::Sofa), &cfg, None, 3).unwrap();
        assert_eq!(a.transcript.to_text(), b.transcript.to_text());
    }

    #[test]
    fn replay_reproduces_map_metrics() {
        let scene = corridor();
        let mut cfg = RunConfig::default();
        cfg.backend = SemanticBackend::NoisyRaw;
        cfg.decider.max_steps = 80;
        let out = run_episode(&scene, &spec(CellClass::Chair), &cfg, None, 11).unwrap();
        let again = replay_map(&scene, &out.transcript, &cfg, cfg.filter, None).unwrap();
        assert_eq!(again, out.map_eval);
    }

    #[test]
    fn refined_backend_requires_a_checkpoint() {
        let mut cfg = RunConfig::default();
        cfg.backend = SemanticBackend::Refined;
        assert!(matches!(
            run_episode(&corridor(), &spec(CellClass::Chair), &cfg, None, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn seeds_are_counter_based() {
        assert_eq!(derive_seed(5, &[1, 2]), derive_seed(5, &[1, 2]));
        assert_ne!(derive_seed(5, &[1, 2]), derive_seed(5, &[2, 1]));
        assert_ne!(derive_seed(5, &[0]), derive_seed(6, &[0]));
    }
}
