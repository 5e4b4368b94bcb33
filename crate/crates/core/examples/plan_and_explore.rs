//! Planning on the map: A* between two free cells of a fully known scene,
//! then frontier detection and scoring on a partially explored map.

use navsim::harness::{gen_suite, SuiteParams};
use navsim::semmap::{update_occupancy_in_place, GlobalSemMap, MapGeometry};
use navsim::sensors::{raycast_depth, SensorConfig};
use navsim::skills::planner::CostGrid;
use navsim::skills::{detect_frontiers, plan_astar, score_frontiers, PlanParams, ScoringParams};
use navsim::world::{CellClass, Pose};

fn main() -> navsim::Result<()> {
    let suite = gen_suite(&SuiteParams::default(), 5)?;
    let (_, scene) = &suite.scenes[0];
    let ep = &suite.episodes[0];
    let geom = MapGeometry::new(scene.frame(), scene.width(), scene.height());

    let mut known = GlobalSemMap::new(geom);
    for c in scene.grid().cells() {
        known.set_cell_state(c, !scene.is_free_cell(c));
    }
    let from = known.cell_of(ep.start.x, ep.start.y);
    let far = |e: &&navsim::world::EpisodeSpec| (e.start.x - ep.start.x).hypot(e.start.y - ep.start.y);
    let other = suite
        .episodes
        .iter()
        .filter(|e| e.scene == ep.scene)
        .max_by(|a, b| far(a).total_cmp(&far(b)))
        .expect("episode in scene");
    let to = known.cell_of(other.start.x, other.start.y);
    match plan_astar(&known, from, to, &PlanParams::default()) {
        Some(p) => println!("A* {from:?} -> {to:?}: {} cells, {:.2} m, cost {:.1}", p.cells.len(), p.length, p.cost),
        None => println!("A* {from:?} -> {to:?}: unreachable"),
    }

    // Look around from the start pose only.
    let mut partial = GlobalSemMap::new(geom);
    for k in 0..12 {
        let pose = Pose::new(ep.start.x, ep.start.y, k as f64 * 30.0);
        update_occupancy_in_place(&mut partial, pose, &raycast_depth(scene, pose, &SensorConfig::default()));
    }
    let scoring = ScoringParams::default();
    let costs = CostGrid::from_map(&partial, &PlanParams::default());
    let frontiers = detect_frontiers(&partial, scoring.min_frontier_size);
    println!("{} explored cells, {} frontiers", partial.explored_count(), frontiers.len());
    for (f, s) in score_frontiers(&partial, &costs, frontiers, CellClass::Bed, 2.0, &scoring).iter().take(5) {
        println!("  centroid {:?} size {:>3} area {:.2} object {:.2} total {:.2}", f.centroid, f.cells.len(), s.area, s.object, s.total);
    }
    Ok(())
}
