//! The skill-fusion decider stepped by hand: the goal comes into view, gets
//! mapped, fades away again, and the critic picks the exploration skill.

use navsim::decider::{decide_transition, select_action, DeciderConfig, NavPhase, SkillOutputs};
use navsim::grid::{Cell, Frame};
use navsim::semmap::{fuse_in_place, FilterParams, GlobalSemMap, LocalSemMap, MapGeometry};
use navsim::sensors::SemScan;
use navsim::skills::CriticState;
use navsim::world::{Action, CellClass};

fn main() {
    let goal = CellClass::Tv;
    let f = FilterParams::default();
    let geom = MapGeometry::new(Frame::new(0.0, 0.0, 0.05), 8, 8);
    let cell = Cell::new(4, 4);
    let mut map = GlobalSemMap::new(geom);
    let mut phase = NavPhase::Exploration;

    // (seen this step, detected on the map this step)
    let script = [(false, false), (true, true), (true, true), (true, true), (false, false), (false, false), (false, false), (false, false)];
    for (t, (seen, detected)) in script.into_iter().enumerate() {
        let mut local = LocalSemMap::empty(geom);
        if detected {
            local.set_class(goal, cell);
        } else if t > 3 {
            local.set_covered(cell);
        }
        fuse_in_place(&mut map, &local, f.alpha);
        let sem = SemScan {
            labels: vec![if seen { goal } else { CellClass::Free }; 4],
        };
        phase = decide_transition(phase, &map, &sem, goal, f.threshold, false);
        println!("t={t} seen={seen:<5} evidence={:.3} phase={phase}", map.value(goal, cell));
    }

    let cfg = DeciderConfig::default();
    let out = SkillOutputs {
        learned_explore: Some(Action::TurnLeft),
        map_explore: Some(Action::Forward),
        ..SkillOutputs::default()
    };
    let mut critic = CriticState::new(0.5);
    println!("\ncritic threshold {}", cfg.tau);
    for gain in [12, 12, 4, 0, 0, 9, 12] {
        let score = critic.update(gain);
        let action = select_action(NavPhase::Exploration, score, &cfg, &out).expect("exploration outputs present");
        let skill = if action == Action::TurnLeft { "learned" } else { "map" };
        println!("new cells {gain:>2} critic {score:.3} -> {skill} explorer");
    }
}
