//! Per-step phase log of an episode, with enough header to replay it.

use std::fmt::Write as _;

use crate::decider::NavPhase;
use crate::error::{Error, Result};
use crate::world::{Action, CellClass, Pose};

const MAGIC: &str = "navsim-transcript 1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TranscriptRow {
    pub step: usize,
    pub phase: NavPhase,
    pub action: Action,
    pub critic: f64,
    pub goal_cells: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub scene: String,
    pub start: Pose,
    pub goal: CellClass,
    /// Episode seed; the noise and policy streams derive from it.
    pub seed: u64,
    pub rows: Vec<TranscriptRow>,
}

impl Transcript {
    pub fn new(scene: impl Into<String>, start: Pose, goal: CellClass, seed: u64) -> Self {
        Self {
            scene: scene.into(),
            start,
            goal,
            seed,
            rows: Vec::new(),
        }
    }

    pub fn phases(&self) -> Vec<NavPhase> {
        self.rows.iter().map(|r| r.phase).collect()
    }

    pub fn actions(&self) -> Vec<Action> {
        self.rows.iter().map(|r| r.action).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# {MAGIC}\n# scene {}\n", self.scene);
        let _ = writeln!(s, "# start {} {} {}", self.start.x, self.start.y, self.start.heading);
        let _ = writeln!(s, "# goal {}\n# seed {}", self.goal, self.seed);
        for r in &self.rows {
            let _ = writeln!(s, "{} {} {} {:.6} {}", r.step, r.phase, r.action, r.critic, r.goal_cells);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (i, l) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing `# {key}` header")))?;
            let rest = l
                .strip_prefix("# ")
                .and_then(|r| r.strip_prefix(key))
                .ok_or_else(|| Error::parse(i + 1, format!("expected `# {key}`")))?;
            Ok((i + 1, rest.trim().to_string()))
        };
        let (_, magic) = header("navsim-transcript")?;
        if magic != "1" {
            return Err(Error::parse(1, format!("unsupported transcript version '{magic}'")));
        }
        let (_, scene) = header("scene")?;
        let (ln, start) = header("start")?;
        let v: Vec<f64> = start.split_whitespace().filter_map(|x| x.parse().ok()).collect();
        if v.len() != 3 {
            return Err(Error::parse(ln, "expected `# start x y heading`"));
        }
        let (ln, goal) = header("goal")?;
        let goal: CellClass = goal.parse().map_err(|e: String| Error::parse(ln, e))?;
        let (ln, seed) = header("seed")?;
        let seed: u64 = seed.parse().map_err(|_| Error::parse(ln, format!("bad seed '{seed}'")))?;
        let mut t = Transcript::new(scene, Pose::new(v[0], v[1], v[2]), goal, seed);
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| Error::parse(i + 1, format!("bad {what}"));
            if f.len() != 5 {
                return Err(Error::parse(i + 1, "expected `step phase action critic goal_cells`"));
            }
            t.rows.push(TranscriptRow {
                step: f[0].parse().map_err(|_| bad("step"))?,
                phase: f[1].parse().map_err(|e: String| Error::parse(i + 1, e))?,
                action: f[2].parse().map_err(|e: String| Error::parse(i + 1, e))?,
                critic: f[3].parse().map_err(|_| bad("critic"))?,
                goal_cells: f[4].parse().map_err(|_| bad("goal cell count"))?,
            });
        }
        Ok(t)
    }
}
