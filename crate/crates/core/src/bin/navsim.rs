use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use navsim::error::{Error, Result};
use navsim::harness::{
    collect_refiner_dataset, gen_suite, load_scene_dir, replay_map, run_suite, train_refiner, CollectParams, Dataset,
    RunConfig, SemanticBackend, Suite, SuiteParams, Transcript,
};
use navsim::refiner::{load_checkpoint, save_checkpoint, Checkpoint, FusionParams};
use navsim::world::{load_scene, CellClass};

#[derive(Parser)]
#[command(name = "navsim", version, about = "Object-goal navigation on synthetic 2D scenes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scene files and an episode file.
    Gen(GenArgs),
    /// Record noisy frame sequences for refiner training.
    Collect(CollectArgs),
    /// Train the refiner (single-frame baseline, then meta-training).
    Train(TrainArgs),
    /// Run an episode set and write per-episode results as CSV.
    Run(RunArgs),
    /// Rebuild an episode's map from its transcript and score it.
    EvalMap(EvalMapArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    scenes: usize,
    #[arg(long, default_value_t = 5)]
    episodes_per_scene: usize,
    /// Share of episodes whose goal class is absent from the scene.
    #[arg(long, default_value_t = 0.0)]
    absent: f64,
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise and sensor settings are read from here when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = CollectParams::default().points)]
    points: usize,
    #[arg(long, default_value_t = CollectParams::default().depth)]
    depth: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the non-adapted baseline as a checkpoint.
    #[arg(long)]
    baseline_out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    episodes: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Overrides the config's backend.
    #[arg(long)]
    backend: Option<SemanticBackend>,
    /// Directory for one transcript per episode.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

#[derive(Args)]
struct EvalMapArgs {
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where the transcript's scene lives; defaults to the transcript's
    /// directory.
    #[arg(long)]
    scenes: Option<PathBuf>,
    #[arg(long)]
    ckpt: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn config(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::parse(&read(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => Ok(RunConfig::default()),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let params = SuiteParams {
        scenes: a.scenes,
        episodes_per_scene: a.episodes_per_scene,
        absent: a.absent,
        ..SuiteParams::default()
    };
    let suite = gen_suite(&params, a.seed)?;
    suite.write(&a.out)?;
    println!("wrote {} scenes and {} episodes to {}", suite.scenes.len(), suite.episodes.len(), a.out.display());
    Ok(())
}

fn collect(a: CollectArgs) -> Result<()> {
    let cfg = config(a.config.as_ref())?;
    let scenes: Vec<_> = load_scene_dir(&a.scenes)?.into_iter().map(|(_, s)| s).collect();
    let params = CollectParams {
        points: a.points,
        depth: a.depth,
        turn_angle: cfg.turn_angle,
        sensor: cfg.sensor,
        noise: cfg.noise,
        ..CollectParams::default()
    };
    let data = collect_refiner_dataset(&scenes, &params, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    data.save(&a.out)?;
    println!(
        "wrote {} sequences from {} viewpoints ({:.0}% with a goal in view) to {}",
        data.sequences.len(),
        data.points_with_goal.len(),
        100.0 * data.goal_point_share(),
        a.out.display()
    );
    let counts = data.class_counts();
    for c in CellClass::GOALS {
        if counts[c.index()] == 0 {
            eprintln!("warning: no '{c}' rays in the dataset; the refiner will not learn that class");
        }
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = config(a.config.as_ref())?;
    let data = Dataset::load(&a.data)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let out = train_refiner(&data.samples(), &cfg.adapt, &mut ChaCha8Rng::seed_from_u64(seed))?;
    save_checkpoint(&a.out, &out.checkpoint)?;
    let b = &out.baseline_report;
    let m = &out.meta_report;
    println!("baseline  val loss {:.4} -> {:.4} (epoch {})", b.initial_val_loss(), b.best_val_loss(), b.best_epoch);
    println!("meta      val loss {:.4} -> {:.4} (epoch {})", m.initial_val_loss(), m.best_val_loss(), m.best_epoch);
    println!("wrote {}", a.out.display());
    if let Some(p) = a.baseline_out {
        // A constant fusion loss has zero gradient, so adaptation is a no-op.
        let ck = Checkpoint {
            theta: out.baseline,
            phi: FusionParams::zeros(),
        };
        save_checkpoint(&p, &ck)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = config(a.config.as_ref())?;
    if let Some(b) = a.backend {
        cfg.backend = b;
    }
    let model = a.ckpt.as_ref().map(load_checkpoint).transpose()?;
    let suite = Suite::load(&a.scenes, &a.episodes)?;
    let summary = run_suite(&suite, &cfg, model.as_ref(), a.seed, a.repeats)?;
    write(&a.out, &summary.csv())?;
    if let Some(dir) = &a.transcripts {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (row, t) in summary.rows.iter().zip(&summary.transcripts) {
            write(&dir.join(format!("{}.txt", row.episode)), &t.to_text())?;
        }
    }
    print!("{}", summary.table());
    println!("wrote {}", a.out.display());
    Ok(())
}

fn eval_map(a: EvalMapArgs) -> Result<()> {
    let cfg = config(a.config.as_ref())?;
    let transcript = Transcript::parse(&read(&a.transcript)?)?;
    let dir = a
        .scenes
        .clone()
        .unwrap_or_else(|| a.transcript.parent().map(Path::to_path_buf).unwrap_or_default());
    let scene = load_scene(&read(&dir.join(&transcript.scene))?)?;
    let model = a.ckpt.as_ref().map(load_checkpoint).transpose()?;
    let m = replay_map(&scene, &transcript, &cfg, cfg.filter, model.as_ref())?;
    println!("scene      {}", transcript.scene);
    println!("goal       {}", transcript.goal);
    println!("steps      {}", transcript.rows.len());
    println!("closeness  {:.4}", m.closeness_sigmoid);
    println!("iou        {:.4}", m.iou);
    println!("spurious   {}", m.spurious);
    println!("missed     {}", m.missed);
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Collect(a) => collect(a),
        Cmd::Train(a) => train(a),
        Cmd::Run(a) => run(a),
        Cmd::EvalMap(a) => eval_map(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("navsim: error: {e}");
            ExitCode::FAILURE
        }
    }
}
