//! One episode with ground-truth semantics: the phase and action per step,
//! then the navigation and map metrics.

use navsim::harness::{gen_suite, run_episode, RunConfig, SuiteParams};

fn main() -> navsim::Result<()> {
    let suite = gen_suite(&SuiteParams::default(), 2024)?;
    let ep = &suite.episodes[0];
    let scene = &suite.scenes.iter().find(|(n, _)| *n == ep.scene).expect("scene of episode").1;
    let out = run_episode(scene, ep, &RunConfig::default(), None, 42)?;

    println!("goal {} in {}", ep.goal.name(), ep.scene);
    let mut last = None;
    for row in &out.transcript.rows {
        if last != Some(row.phase) {
            println!("step {:>3}: {}", row.step, row.phase);
            last = Some(row.phase);
        }
    }
    let r = &out.result;
    println!("success {} after {} steps, path {:.2} m, optimal {:?}", r.success, r.steps, r.path_length, r.optimal_length);
    let m = &out.map_eval;
    println!("map: closeness {:.3} iou {:.3} spurious {} missed {}", m.closeness_sigmoid, m.iou, m.spurious, m.missed);
    Ok(())
}
