//! Ground-truth, raw noisy and refined semantics on the same episodes. The
//! refiner is trained on separate scenes first, which takes a few minutes.
//!
//! cargo run --release --example compare_backends

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use navsim::harness::{collect_refiner_dataset, gen_suite, run_suite, train_refiner, CollectParams, RunConfig, SemanticBackend, Suite, SuiteParams};
use navsim::refiner::AdaptConfig;

fn main() -> navsim::Result<()> {
    let train_scenes: Vec<_> = gen_suite(&SuiteParams { scenes: 20, ..SuiteParams::default() }, 11)?
        .scenes
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let data = collect_refiner_dataset(&train_scenes, &CollectParams::default(), &mut ChaCha8Rng::seed_from_u64(1))?;
    let model = train_refiner(&data.samples(), &AdaptConfig::default(), &mut ChaCha8Rng::seed_from_u64(2))?.checkpoint;

    let g = gen_suite(&SuiteParams { scenes: 4, ..SuiteParams::default() }, 2024)?;
    let suite = Suite {
        scenes: g.scenes.into_iter().collect(),
        episodes: g.episodes,
    };
    for backend in [SemanticBackend::Gt, SemanticBackend::NoisyRaw, SemanticBackend::Refined] {
        let cfg = RunConfig {
            backend,
            ..RunConfig::default()
        };
        let summary = run_suite(&suite, &cfg, Some(&model), 1, 2)?;
        println!("== {backend}");
        print!("{}", summary.table());
    }
    Ok(())
}
