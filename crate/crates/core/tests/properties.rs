//! Property tests over the public API: text round trips and map invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use navsim::grid::{Cell, Frame};
use navsim::harness::{gen_scene, gen_suite, GenParams, RunConfig, SuiteParams};
use navsim::refiner::{Checkpoint, FusionParams, SegModelParams};
use navsim::semmap::{fuse, morph_filter, GlobalSemMap, LocalSemMap, MapGeometry};
use navsim::world::{format_episode, load_scene, parse_episodes, CellClass};

fn local_from(w: usize, h: usize, bits: &[bool], covered: &[bool]) -> LocalSemMap {
    let mut l = LocalSemMap::empty(MapGeometry::new(Frame::new(0.0, 0.0, 0.05), w, h));
    for (i, (&b, &c)) in bits.iter().zip(covered).enumerate() {
        let cell = Cell::new((i / w) as i32, (i % w) as i32);
        if c {
            l.set_covered(cell);
        }
        if b {
            l.set_class(CellClass::Toilet, cell);
        }
    }
    l
}

fn grid_strategy() -> impl Strategy<Value = (usize, usize, Vec<bool>, Vec<bool>)> {
    (1usize..16, 1usize..16).prop_flat_map(|(w, h)| {
        (
            Just(w),
            Just(h),
            prop::collection::vec(any::<bool>(), w * h),
            prop::collection::vec(any::<bool>(), w * h),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn opening_is_idempotent_and_shrinks((w, h, bits, cov) in grid_strategy(), k in 1usize..3) {
        let l = local_from(w, h, &bits, &cov);
        let once = morph_filter(&l, k);
        let twice = morph_filter(&once, k);
        prop_assert_eq!(once.class_grid(CellClass::Toilet), twice.class_grid(CellClass::Toilet));
        let before = l.class_grid(CellClass::Toilet);
        let after = once.class_grid(CellClass::Toilet);
        prop_assert!(after.cells().all(|c| !after[c] || before[c]));
    }

    #[test]
    fn fusion_never_goes_negative_and_untouched_cells_keep_value(
        (w, h, bits, cov) in grid_strategy(),
        alpha in 0.0f64..1.0,
        start in 0.0f64..5.0,
    ) {
        let l = local_from(w, h, &bits, &cov);
        let mut prev = GlobalSemMap::new(*l.geometry());
        prev.class_grid_mut(CellClass::Toilet).as_mut_slice().iter_mut().for_each(|v| *v = start);
        let next = fuse(&prev, &l, alpha);
        for c in prev.class_grid(CellClass::Toilet).cells() {
            let v = next.value(CellClass::Toilet, c);
            prop_assert!(v >= 0.0);
            if !l.coverage()[c] {
                prop_assert_eq!(v, start);
            }
        }
    }

    #[test]
    fn scenes_round_trip_through_text(seed in 0u64..500) {
        let scene = gen_scene(&GenParams::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let text = scene.to_text();
        prop_assert_eq!(load_scene(&text).unwrap().to_text(), text);
    }

    #[test]
    fn checkpoints_round_trip_exactly(vals in prop::collection::vec(-1e6f64..1e6, 1..8)) {
        let mut theta = SegModelParams::zeros();
        let mut phi = FusionParams::zeros();
        for (i, v) in vals.iter().enumerate() {
            theta.theta[i * 7] = *v;
            phi.phi[i * 101] = v / 3.0;
        }
        let ck = Checkpoint { theta, phi };
        prop_assert_eq!(Checkpoint::parse(&ck.to_text()).unwrap(), ck);
    }
}

#[test]
fn episodes_round_trip_through_text() {
    let suite = gen_suite(&SuiteParams { absent: 0.3, ..SuiteParams::default() }, 17).unwrap();
    let text: String = suite.episodes.iter().map(|e| format_episode(e) + "\n").collect();
    let back = parse_episodes(&text).unwrap();
    let again: String = back.iter().map(|e| format_episode(e) + "\n").collect();
    assert_eq!(text, again);
    assert_eq!(back.len(), suite.episodes.len());
}

#[test]
fn config_round_trips_and_rejects_unknown_keys() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    assert!(RunConfig::parse("no_such_key = 1\n").is_err());
    assert!(RunConfig::parse("filter_alpha = 1.5\n").is_err());
}
