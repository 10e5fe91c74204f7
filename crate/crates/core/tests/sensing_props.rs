use proptest::prelude::*;

use roi_explore::grid_world::Cell;
use roi_explore::harness::trial_world;
use roi_explore::sensing::{
    finish_noisy, load_resume_state, noisy_explore, noisy_explorer, save_resume_state, BeliefLabel, BeliefMap,
    SensorModel,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn positive_beliefs_stick(updates in prop::collection::vec((0i32..4, 0i32..4, any::<bool>()), 0..60)) {
        let mut m = BeliefMap::new();
        for (x, y, hit) in updates {
            let c = Cell::new(x, y);
            let before = m.label(c);
            m.update_belief(c, hit);
            let after = m.label(c);
            if before.is_roi() {
                prop_assert_eq!(after, before);
            }
            prop_assert_eq!(after.is_roi(), before.is_roi() || hit);
        }
    }

    #[test]
    fn noisy_runs_resume_anywhere(c in 10usize..60, seed in any::<u64>(), stops in prop::collection::vec(1u64..25, 1..4)) {
        let world = trial_world(c, seed).unwrap();
        let model = SensorModel::field(seed);
        let whole = noisy_explore(&world, 3, 2.5, model).unwrap();
        let mut ex = noisy_explorer(&world, 3, 2.5, model).unwrap();
        for s in stops {
            for _ in 0..s {
                if !ex.advance().unwrap() {
                    break;
                }
            }
            ex = load_resume_state(&save_resume_state(&ex)).unwrap();
        }
        let split = finish_noisy(ex).unwrap();
        prop_assert_eq!(serde_json::to_string(&split).unwrap(), serde_json::to_string(&whole).unwrap());
    }

    #[test]
    fn noisy_outcome_is_consistent(c in 5usize..80, seed in any::<u64>()) {
        let world = trial_world(c, seed).unwrap();
        let o = noisy_explore(&world, 4, 2.5, SensorModel::field(seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&o.iou));
        prop_assert!(o.run.tree.all_explored());
        for cell in o.run.tree.cells() {
            prop_assert_eq!(o.belief_map.label(cell), BeliefLabel::RoiExplored);
        }
        let missing = world.cells().iter().filter(|c| !o.run.tree.contains_cell(**c)).count();
        prop_assert_eq!(missing, o.unreached_roi_cells.len());
    }
}

#[test]
fn perfect_model_sees_the_truth() {
    let world = trial_world(70, 3).unwrap();
    let o = noisy_explore(&world, 5, 2.5, SensorModel::perfect(1)).unwrap();
    assert_eq!(o.iou, 1.0);
    assert!(!o.disconnected());
    assert_eq!((o.confusion.fp, o.confusion.fn_), (0, 0));
}
