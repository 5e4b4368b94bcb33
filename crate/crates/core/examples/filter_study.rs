//! Map filtering settings compared on recorded episodes: each transcript is
//! replayed with a different opening size, fade factor and threshold.

use navsim::harness::{gen_suite, replay_map, run_suite, RunConfig, SemanticBackend, Suite, SuiteParams};
use navsim::metrics::fpr_fnr;
use navsim::semmap::FilterParams;

fn main() -> navsim::Result<()> {
    let g = gen_suite(&SuiteParams { scenes: 4, absent: 0.5, ..SuiteParams::default() }, 2024)?;
    let suite = Suite {
        scenes: g.scenes.into_iter().collect(),
        episodes: g.episodes,
    };
    let cfg = RunConfig {
        backend: SemanticBackend::NoisyRaw,
        ..RunConfig::default()
    };
    let run = run_suite(&suite, &cfg, None, 2024, 1)?;

    let settings = [
        FilterParams::unfiltered(0.9),
        FilterParams { k: 0, alpha: 0.9, threshold: 2.0 },
        FilterParams { k: 1, alpha: 0.9, threshold: 1.0 },
        FilterParams { k: 1, alpha: 0.9, threshold: 2.0 },
        FilterParams { k: 1, alpha: 0.7, threshold: 2.0 },
        FilterParams { k: 2, alpha: 0.9, threshold: 2.0 },
    ];
    println!("{:>2} {:>5} {:>4}  {:>5} {:>5} {:>5}", "k", "alpha", "T", "FPR", "FNR", "IoU");
    for f in settings {
        let evals = run
            .transcripts
            .iter()
            .map(|t| replay_map(suite.scene(&t.scene)?, t, &cfg, f, None))
            .collect::<navsim::Result<Vec<_>>>()?;
        let (fpr, fnr) = fpr_fnr(&evals);
        let iou = evals.iter().map(|e| e.iou).sum::<f64>() / evals.len() as f64;
        println!("{:>2} {:>5.2} {:>4.1}  {fpr:>5.2} {fnr:>5.2} {iou:>5.2}", f.k, f.alpha, f.threshold);
    }
    Ok(())
}
