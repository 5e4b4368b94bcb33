//! Refiner training data: noisy frame sequences from random viewpoints,
//! labelled with the ground truth of their root frame.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::Cell;
use crate::refiner::{featurize, TrainSample};
use crate::sensors::{corrupt_semantics, observe, DepthScan, SegNoiseModel, SemScan, SensorConfig};
use crate::world::{step, translate, Action, AgentState, CellClass, Pose, Scene, FORWARD_STEP, NUM_CLASSES};

const MAGIC: &str = "navsim-dataset 1";

/// Moves available while recording a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollectMove {
    Left,
    Right,
    Back,
}

pub const COLLECT_MOVES: [CollectMove; 3] = [CollectMove::Left, CollectMove::Right, CollectMove::Back];

/// Every move sequence of exactly `depth` moves, in lexicographic order.
pub fn move_sequences(depth: usize) -> Vec<Vec<CollectMove>> {
    let mut out = vec![Vec::new()];
    for _ in 0..depth {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                COLLECT_MOVES.iter().map(move |m| {
                    let mut p = prefix.clone();
                    p.push(*m);
                    p
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollectParams {
    pub points: usize,
    /// Moves per sequence; each sequence has `depth + 1` frames.
    pub depth: usize,
    /// Share of points whose root view is required to contain a goal.
    pub goal_share: f64,
    pub turn_angle: f64,
    pub sensor: SensorConfig,
    pub noise: SegNoiseModel,
}

impl Default for CollectParams {
    fn default() -> Self {
        Self {
            points: 400,
            depth: 2,
            goal_share: 0.5,
            turn_angle: 30.0,
            sensor: SensorConfig::default(),
            noise: SegNoiseModel::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordedFrame {
    pub pose: Pose,
    pub depth: DepthScan,
    pub sem: SemScan,
}

/// Root frame first, then the frame after each move.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordedSequence {
    pub frames: Vec<RecordedFrame>,
    pub gt: Vec<CellClass>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<RecordedSequence>,
    /// Whether each point's root view has a goal-class ray.
    pub points_with_goal: Vec<bool>,
}

fn apply(scene: &Scene, state: &AgentState, m: CollectMove, turn: f64) -> AgentState {
    match m {
        CollectMove::Left => step(scene, state, Action::TurnLeft, turn),
        CollectMove::Right => step(scene, state, Action::TurnRight, turn),
        CollectMove::Back => translate(scene, state, -FORWARD_STEP),
    }
}

fn has_goal(sem: &SemScan) -> bool {
    sem.labels.iter().any(|c| c.is_goal())
}

fn clear_cells(scene: &Scene) -> Vec<Cell> {
    let k = (0.2 / scene.resolution()).ceil() as i32;
    scene
        .grid()
        .cells()
        .filter(|c| (-k..=k).all(|dr| (-k..=k).all(|dc| scene.is_free_cell(Cell::new(c.row + dr, c.col + dc)))))
        .collect()
}

fn random_pose<R: Rng + ?Sized>(scene: &Scene, cells: &[Cell], rng: &mut R) -> Pose {
    let c = *cells.choose(rng).expect("non-empty");
    let (x, y) = scene.center_of(c);
    Pose::new(x, y, rng.gen_range(0.0..360.0))
}

pub fn collect_refiner_dataset<R: Rng + ?Sized>(scenes: &[Scene], params: &CollectParams, rng: &mut R) -> Result<Dataset> {
    if scenes.is_empty() {
        return Err(Error::Config("no scenes to collect from".into()));
    }
    let free: Vec<Vec<Cell>> = scenes.iter().map(clear_cells).collect();
    if free.iter().all(Vec::is_empty) {
        return Err(Error::Config("no clear start cells in the scenes".into()));
    }
    let moves = move_sequences(params.depth);
    let mut data = Dataset::default();
    for _ in 0..params.points {
        let si = loop {
            let i = rng.gen_range(0..scenes.len());
            if !free[i].is_empty() {
                break i;
            }
        };
        let scene = &scenes[si];
        let want_goal = rng.gen::<f64>() < params.goal_share;
        let mut pose = random_pose(scene, &free[si], rng);
        if want_goal {
            // Rejection sampling; falls back to the last draw.
            for _ in 0..500 {
                if has_goal(&observe(scene, pose, &params.sensor).1) {
                    break;
                }
                pose = random_pose(scene, &free[si], rng);
            }
        }
        let (depth, gt) = observe(scene, pose, &params.sensor);
        data.points_with_goal.push(has_goal(&gt));
        let root = RecordedFrame {
            pose,
            sem: corrupt_semantics(&gt, &depth, &params.noise, rng),
            depth,
        };
        for seq in &moves {
            let mut state = AgentState::at(pose);
            let mut frames = vec![root.clone()];
            for m in seq {
                state = apply(scene, &state, *m, params.turn_angle);
                let p = state.pose();
                let (d, g) = observe(scene, p, &params.sensor);
                frames.push(RecordedFrame {
                    pose: p,
                    sem: corrupt_semantics(&g, &d, &params.noise, rng),
                    depth: d,
                });
            }
            data.sequences.push(RecordedSequence {
                frames,
                gt: gt.labels.clone(),
            });
        }
    }
    Ok(data)
}

fn labels_text(labels: &[CellClass]) -> String {
    labels.iter().map(|c| c.to_char()).collect()
}

fn parse_labels(s: &str, line: usize) -> Result<Vec<CellClass>> {
    s.chars()
        .map(|ch| CellClass::from_char(ch).ok_or_else(|| Error::parse(line, format!("bad label '{ch}'"))))
        .collect()
}

impl Dataset {
    pub fn samples(&self) -> Vec<TrainSample> {
        self.sequences
            .iter()
            .map(|s| TrainSample {
                frames: s.frames.iter().map(|f| featurize(&f.depth, &f.sem)).collect(),
                gt: s.gt.clone(),
            })
            .collect()
    }

    /// Ground-truth label counts over the target frames, by class index.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut n = [0; NUM_CLASSES];
        for s in &self.sequences {
            s.gt.iter().for_each(|c| n[c.index()] += 1);
        }
        n
    }

    pub fn goal_point_share(&self) -> f64 {
        self.points_with_goal.iter().filter(|b| **b).count() as f64 / self.points_with_goal.len().max(1) as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC}\npoints {}\n", labels_bools(&self.points_with_goal));
        let _ = writeln!(s, "sequences {}", self.sequences.len());
        for seq in &self.sequences {
            let _ = writeln!(s, "seq {}\ngt {}", seq.frames.len(), labels_text(&seq.gt));
            for f in &seq.frames {
                let _ = writeln!(s, "frame {} {} {} {} {}", f.pose.x, f.pose.y, f.pose.heading, f.depth.fov, f.depth.max_range);
                let ranges: Vec<String> = f.depth.ranges.iter().map(|r| r.to_string()).collect();
                let _ = writeln!(s, "ranges {}\nlabels {}", ranges.join(" "), labels_text(&f.sem.labels));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let mut next = |key: &str| -> Result<(usize, String)> {
            let (n, l) = lines.next().ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected `{key}`")))?;
            let rest = l
                .strip_prefix(key)
                .ok_or_else(|| Error::parse(n, format!("expected `{key}`")))?;
            Ok((n, rest.trim().to_string()))
        };
        let (_, magic) = next("navsim-dataset")?;
        if magic != "1" {
            return Err(Error::parse(1, format!("unsupported dataset version '{magic}'")));
        }
        let (n, pts) = next("points")?;
        let points_with_goal = pts
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Error::parse(n, "points must be 0/1 flags")),
            })
            .collect::<Result<_>>()?;
        let (n, count) = next("sequences")?;
        let count: usize = count.parse().map_err(|_| Error::parse(n, "bad sequence count"))?;
        let mut sequences = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, nf) = next("seq")?;
            let nf: usize = nf.parse().map_err(|_| Error::parse(n, "bad frame count"))?;
            let (n, gt) = next("gt")?;
            let gt = parse_labels(&gt, n)?;
            let mut frames = Vec::with_capacity(nf);
            for _ in 0..nf {
                let (n, hdr) = next("frame")?;
                let v: Vec<f64> = hdr
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| Error::parse(n, format!("bad number '{x}'"))))
                    .collect::<Result<_>>()?;
                if v.len() != 5 {
                    return Err(Error::parse(n, "expected `frame x y heading fov max_range`"));
                }
                let (n, r) = next("ranges")?;
                let ranges: Vec<f64> = r
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| Error::parse(n, format!("bad range '{x}'"))))
                    .collect::<Result<_>>()?;
                let (n, l) = next("labels")?;
                let labels = parse_labels(&l, n)?;
                if labels.len() != ranges.len() || labels.len() != gt.len() {
                    return Err(Error::parse(n, "ray count mismatch"));
                }
                frames.push(RecordedFrame {
                    pose: Pose::new(v[0], v[1], v[2]),
                    depth: DepthScan {
                        ranges,
                        fov: v[3],
                        max_range: v[4],
                    },
                    sem: SemScan { labels },
                });
            }
            sequences.push(RecordedSequence { frames, gt });
        }
        Ok(Self {
            sequences,
            points_with_goal,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_text()).map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::parse(&text)
    }
}

fn labels_bools(v: &[bool]) -> String {
    v.iter().map(|b| if *b { '1' } else { '0' }).collect()
}
