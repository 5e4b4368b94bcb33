//! Repeated runs of an episode set, in parallel, merged in episode order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{fpr_fnr, results_csv, softspl, spl, success_rate, EpisodeResult, MapEvalResult, ResultRow};
use crate::refiner::Checkpoint;
use crate::world::{load_scene, parse_episodes, EpisodeSpec, Scene};

use super::config::RunConfig;
use super::episode::{derive_seed, run_episode};
use super::transcript::Transcript;

/// Scenes keyed by the name episodes refer to them by.
#[derive(Clone, Debug)]
pub struct Suite {
    pub scenes: BTreeMap<String, Scene>,
    pub episodes: Vec<EpisodeSpec>,
}

impl Suite {
    /// Reads the episode file and every scene it names, relative to
    /// `scenes_dir`. Any parse failure aborts.
    pub fn load(scenes_dir: impl AsRef<Path>, episodes_file: impl AsRef<Path>) -> Result<Self> {
        let ep_path = episodes_file.as_ref();
        let text = fs::read_to_string(ep_path).map_err(|e| Error::io(ep_path, e))?;
        let episodes = parse_episodes(&text)?;
        let mut scenes = BTreeMap::new();
        for ep in &episodes {
            if scenes.contains_key(&ep.scene) {
                continue;
            }
            let p = scenes_dir.as_ref().join(&ep.scene);
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let scene = load_scene(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            scenes.insert(ep.scene.clone(), scene);
        }
        Ok(Self { scenes, episodes })
    }

    pub fn scene(&self, name: &str) -> Result<&Scene> {
        self.scenes
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown scene '{name}'")))
    }
}

/// Every `*.txt` scene file in `dir` except `episodes.txt`, sorted by name.
pub fn load_scene_dir(dir: impl AsRef<Path>) -> Result<Vec<(String, Scene)>> {
    let dir = dir.as_ref();
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".txt") && n != "episodes.txt")
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Config(format!("no scene files in {}", dir.display())));
    }
    names
        .into_iter()
        .map(|n| {
            let p = dir.join(&n);
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let scene = load_scene(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            Ok((n, scene))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub transcripts: Vec<Transcript>,
    pub config: RunConfig,
    pub seed: u64,
    pub repeats: usize,
}

impl RunSummary {
    pub fn nav(&self) -> Vec<EpisodeResult> {
        self.rows.iter().map(|r| r.nav).collect()
    }

    pub fn maps(&self) -> Vec<MapEvalResult> {
        self.rows.iter().map(|r| r.map).collect()
    }

    pub fn success(&self) -> f64 {
        success_rate(&self.nav())
    }

    /// Success rate of each repeat, in repeat order.
    pub fn success_per_repeat(&self) -> Vec<f64> {
        let per = self.rows.len() / self.repeats.max(1);
        self.rows
            .chunks(per.max(1))
            .map(|c| success_rate(&c.iter().map(|r| r.nav).collect::<Vec<_>>()))
            .collect()
    }

    pub fn csv(&self) -> String {
        results_csv(&self.rows)
    }

    pub fn table(&self) -> String {
        let nav = self.nav();
        let maps = self.maps();
        let (spl_v, excluded) = spl(&nav);
        let (soft, _) = softspl(&nav);
        let (fpr, fnr) = fpr_fnr(&maps);
        let n = maps.len().max(1) as f64;
        let mut s = String::new();
        let _ = writeln!(s, "backend   {}", self.config.backend);
        let _ = writeln!(s, "seed      {}", self.seed);
        let _ = writeln!(s, "episodes  {} ({} repeats)", self.rows.len(), self.repeats);
        let _ = writeln!(s, "success   {:.3}", self.success());
        let _ = writeln!(s, "spl       {spl_v:.3}");
        let _ = writeln!(s, "softspl   {soft:.3}");
        if excluded > 0 {
            let _ = writeln!(s, "excluded  {excluded} (no optimal path)");
        }
        let _ = writeln!(s, "closeness {:.3}", maps.iter().map(|m| m.closeness_sigmoid).sum::<f64>() / n);
        let _ = writeln!(s, "iou       {:.3}", maps.iter().map(|m| m.iou).sum::<f64>() / n);
        let _ = writeln!(s, "fpr       {fpr:.3}");
        let _ = writeln!(s, "fnr       {fnr:.3}");
        s
    }
}

/// Runs `repeats x episodes`; episode `i` of repeat `r` uses the seed
/// derived from `(seed, r, i)`.
pub fn run_suite(suite: &Suite, cfg: &RunConfig, model: Option<&Checkpoint>, seed: u64, repeats: usize) -> Result<RunSummary> {
    if suite.episodes.is_empty() {
        return Err(Error::Config("the episode file has no episodes".into()));
    }
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    cfg.validate()?;
    for ep in &suite.episodes {
        suite.scene(&ep.scene)?;
    }
    let jobs: Vec<(usize, usize)> = (0..repeats)
        .flat_map(|r| (0..suite.episodes.len()).map(move |i| (r, i)))
        .collect();
    let outputs: Vec<Result<(ResultRow, Transcript)>> = jobs
        .par_iter()
        .map(|&(r, i)| {
            let ep = &suite.episodes[i];
            let s = derive_seed(seed, &[r as u64, i as u64]);
            let out = run_episode(suite.scene(&ep.scene)?, ep, cfg, model, s)?;
            let row = ResultRow {
                episode: format!("r{r}_e{i}"),
                scene: ep.scene.clone(),
                goal: ep.goal,
                nav: out.result,
                map: out.map_eval,
            };
            Ok((row, out.transcript))
        })
        .collect();
    let mut rows = Vec::with_capacity(outputs.len());
    let mut transcripts = Vec::with_capacity(outputs.len());
    for o in outputs {
        let (row, t) = o?;
        rows.push(row);
        transcripts.push(t);
    }
    Ok(RunSummary {
        rows,
        transcripts,
        config: cfg.clone(),
        seed,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenegen::{gen_suite, SuiteParams};

    fn small_suite(episodes: usize) -> Suite {
        let g = gen_suite(
            &SuiteParams {
                scenes: 1,
                episodes_per_scene: episodes,
                ..SuiteParams::default()
            },
            4,
        )
        .unwrap();
        Suite {
            scenes: g.scenes.into_iter().collect(),
            episodes: g.episodes,
        }
    }

    #[test]
    fn one_episode_five_repeats_gives_five_rows() {
        let suite = small_suite(1);
        let mut cfg = RunConfig::default();
        cfg.decider.max_steps = 40;
        let s = run_suite(&suite, &cfg, None, 1, 5).unwrap();
        assert_eq!(s.rows.len(), 5);
        assert_eq!(s.csv().lines().count(), 7);
        assert_eq!(s.success_per_repeat().len(), 5);
    }

    #[test]
    fn aggregate_success_is_the_column_mean() {
        let suite = small_suite(4);
        let mut cfg = RunConfig::default();
        cfg.decider.max_steps = 60;
        let s = run_suite(&suite, &cfg, None, 2, 1).unwrap();
        let csv = s.csv();
        let col: Vec<f64> = csv
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with("AGGREGATE"))
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        let agg: f64 = csv.lines().last().unwrap().split(',').nth(3).unwrap().parse().unwrap();
        assert!((agg - col.iter().sum::<f64>() / col.len() as f64).abs() < 1e-6);
    }

    #[test]
    fn empty_suites_and_unknown_scenes_are_rejected() {
        let mut suite = small_suite(1);
        let cfg = RunConfig::default();
        suite.episodes[0].scene = "nope.txt".into();
        assert!(run_suite(&suite, &cfg, None, 0, 1).is_err());
        suite.episodes.clear();
        assert!(run_suite(&suite, &cfg, None, 0, 1).is_err());
    }
}
