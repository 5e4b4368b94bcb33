//! Procedural floor plans: generate a small suite, print one scene as text
//! and the geodesic length of each episode.
//!
//! cargo run --example generate_scenes -- [seed]

use navsim::harness::{gen_suite, SuiteParams};
use navsim::world::{shortest_path_length, CellClass};

fn main() -> navsim::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let params = SuiteParams {
        scenes: 3,
        episodes_per_scene: 4,
        absent: 0.25,
        ..SuiteParams::default()
    };
    let suite = gen_suite(&params, seed)?;
    let (name, scene) = &suite.scenes[0];
    println!("{name}: {}x{} cells at {} m", scene.width(), scene.height(), scene.resolution());
    print!("{}", scene.to_text());
    for class in CellClass::GOALS {
        println!("{:>12}: {} cells", class.name(), scene.class_cells(class).count());
    }
    println!();
    for ep in &suite.episodes {
        let scene = &suite.scenes.iter().find(|(n, _)| *n == ep.scene).expect("scene of episode").1;
        match shortest_path_length(scene, ep.start, ep.goal) {
            Some(l) => println!("{} -> {:<12} geodesic {l:.2} m", ep.scene, ep.goal.name()),
            None => println!("{} -> {:<12} absent", ep.scene, ep.goal.name()),
        }
    }
    Ok(())
}
