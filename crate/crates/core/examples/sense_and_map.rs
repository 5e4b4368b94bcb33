//! Sensing and semantic mapping: cast depth rays, corrupt the labels with
//! phantom noise, and build the global map with and without filtering.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use navsim::harness::{gen_suite, SuiteParams};
use navsim::semmap::{goal_cells, integrate, update_occupancy_in_place, FilterParams, GlobalSemMap, MapGeometry, ProjectionParams};
use navsim::sensors::{corrupt_semantics, observe, SegNoiseModel, SensorConfig};
use navsim::world::{step, Action, AgentState, CellClass};

fn main() -> navsim::Result<()> {
    let suite = gen_suite(&SuiteParams::default(), 3)?;
    let (_, scene) = &suite.scenes[0];
    let ep = &suite.episodes[0];
    let sensor = SensorConfig::default();
    let noise = SegNoiseModel::default();
    let geom = MapGeometry::new(scene.frame(), scene.width(), scene.height());
    let filters = [("filtered", FilterParams::default()), ("unfiltered", FilterParams::unfiltered(0.9))];
    let mut maps: Vec<GlobalSemMap> = filters.iter().map(|_| GlobalSemMap::new(geom)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // Turn in place for a full circle, then walk forward a few steps.
    let mut state = AgentState::at(ep.start);
    let script = [Action::TurnLeft; 12].into_iter().chain([Action::Forward; 8]);
    for action in script {
        let pose = state.pose();
        let (depth, gt) = observe(scene, pose, &sensor);
        let noisy = corrupt_semantics(&gt, &depth, &noise, &mut rng);
        for (map, (_, f)) in maps.iter_mut().zip(&filters) {
            update_occupancy_in_place(map, pose, &depth);
            integrate(map, pose, &depth, &noisy, f, &ProjectionParams::default())?;
        }
        state = step(scene, &state, action, 30.0);
    }

    for (map, (name, f)) in maps.iter().zip(&filters) {
        println!("{name}: {} explored cells", map.explored_count());
        for class in CellClass::GOALS {
            let mapped = goal_cells(map, class, f.threshold).len();
            let present = scene.contains_class(class);
            println!("  {:>12}: {mapped:>4} mapped cells (in scene: {present})", class.name());
        }
    }
    Ok(())
}
