//! Segmentation refiner end to end at a small scale: record noisy frame
//! sequences, train the baseline and the meta-learned fusion loss, then
//! measure adaptation on held-out scenes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use navsim::harness::{collect_refiner_dataset, gen_suite, train_refiner, CollectParams, SuiteParams};
use navsim::refiner::{evaluate_adaptation, AdaptConfig};
use navsim::world::Scene;

fn scenes(seed: u64, n: usize) -> navsim::Result<Vec<Scene>> {
    let params = SuiteParams {
        scenes: n,
        ..SuiteParams::default()
    };
    Ok(gen_suite(&params, seed)?.scenes.into_iter().map(|(_, s)| s).collect())
}

fn main() -> navsim::Result<()> {
    let collect = CollectParams {
        points: 80,
        ..CollectParams::default()
    };
    let train = collect_refiner_dataset(&scenes(11, 6)?, &collect, &mut ChaCha8Rng::seed_from_u64(1))?;
    let held = collect_refiner_dataset(&scenes(99, 4)?, &CollectParams { points: 30, ..collect }, &mut ChaCha8Rng::seed_from_u64(2))?;
    println!("{} training / {} held-out sequences", train.sequences.len(), held.sequences.len());

    let cfg = AdaptConfig {
        meta_epochs: 10,
        pretrain_epochs: 40,
        ..AdaptConfig::default()
    };
    let out = train_refiner(&train.samples(), &cfg, &mut ChaCha8Rng::seed_from_u64(3))?;
    println!(
        "baseline val loss {:.3} -> {:.3}; meta val loss {:.3} -> {:.3}",
        out.baseline_report.initial_val_loss(),
        out.baseline_report.best_val_loss(),
        out.meta_report.initial_val_loss(),
        out.meta_report.best_val_loss()
    );

    let ev = evaluate_adaptation(&out.baseline, &out.checkpoint.theta, &out.checkpoint.phi, &held.samples(), &cfg)?;
    println!("held-out accuracy: baseline {:.3}, adapted {:.3}", ev.mean_baseline_acc(), ev.mean_adapted_acc());
    println!("adaptation lowered the segmentation loss on {:.0}% of sequences", 100.0 * ev.share_improved_over_pre());
    Ok(())
}
