mod common;

use havln::planner::{Planner, PlannerConfig};
use havln::scene::{load_scene, validate_scene, MAX_FRAME_STEP};
use havln::sim::SimConfig;
use havln::synth::{gen_episodes, gen_scene, SceneParams, SynthError};
use havln::Cell;
use proptest::prelude::*;

use common::{empty_scene, ucs};

fn arb_params() -> impl Strategy<Value = SceneParams> {
    (any::<u64>(), 1usize..6, 0usize..10, 0usize..6).prop_map(|(seed, rooms, objects, humans)| SceneParams {
        seed,
        room_count: rooms,
        object_count: objects.max(1),
        human_count: humans,
        ..SceneParams::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_scenes_validate_and_reload(params in arb_params()) {
        let scene = gen_scene(&params).unwrap();
        let problems = validate_scene(&scene);
        prop_assert!(problems.is_empty(), "{:?}", problems);
        prop_assert_eq!(scene.humans.len(), params.human_count);
        for h in &scene.humans {
            prop_assert!(h.motion.frames.windows(2).all(|w| w[0].translation.distance(&w[1].translation) <= MAX_FRAME_STEP));
        }
        let text = scene.to_json();
        prop_assert_eq!(load_scene(text.as_bytes()).unwrap(), scene.clone());
        prop_assert_eq!(gen_scene(&params).unwrap().to_json(), text);
    }

    /// Episode starts and goals are free, far enough apart by an independent
    /// shortest-path search, and clear of every person's route.
    #[test]
    fn episodes_meet_their_constraints(scene_seed in 0u64..16, ep_seed in any::<u64>()) {
        let scene = gen_scene(&SceneParams { seed: scene_seed, ..SceneParams::default() }).unwrap();
        let sim = SimConfig::default();
        let cfg = PlannerConfig::default();
        let eps = gen_episodes(&scene, 3, ep_seed, &sim, &cfg).unwrap();
        prop_assert_eq!(&eps, &gen_episodes(&scene, 3, ep_seed, &sim, &cfg).unwrap());
        let planner = Planner::new(&scene, &sim, &cfg);
        let g = planner.grid();
        for ep in &eps {
            let s: Cell = g.world_to_cell(&ep.start.position).unwrap();
            let t: Cell = g.world_to_cell(&ep.goal).unwrap();
            prop_assert!(!g.is_blocked(s) && !g.is_blocked(t));
            let length = ucs(g, s, t).expect("goal reachable") * g.cell_size();
            prop_assert!(length >= 5.0 - 1e-9, "{} m", length);
            for h in &scene.humans {
                let reach = h.radius() + sim.agent_radius;
                prop_assert!(h.playback_positions().all(|p| p.planar_distance(&ep.start.position) >= reach));
            }
            if let Some(gt) = &ep.gt_path {
                prop_assert!(gt.length + 1e-9 >= length);
            }
        }
    }
}

#[test]
fn bad_parameters_are_rejected() {
    let base = SceneParams::default();
    for p in [
        SceneParams { width: 10, ..base.clone() },
        SceneParams { room_count: 0, ..base.clone() },
        SceneParams { corridor_width: 0.5, ..base.clone() },
        SceneParams { cell_size: 0.0, ..base.clone() },
        SceneParams { object_count: 0, human_count: 2, ..base.clone() },
    ] {
        assert!(matches!(gen_scene(&p), Err(SynthError::InvalidParams(_))), "{p:?}");
    }
    let crowded = SceneParams { width: 40, height: 40, room_count: 9, ..base };
    assert!(matches!(gen_scene(&crowded), Err(SynthError::Infeasible(_))));
}

#[test]
fn small_or_walled_scenes_yield_no_episodes() {
    let sim = SimConfig::default();
    let cfg = PlannerConfig::default();
    let tiny = empty_scene("tiny", 30, 30, 0.1);
    assert!(matches!(
        gen_episodes(&tiny, 1, 0, &sim, &cfg),
        Err(SynthError::NoReachablePair { episode: 0, .. })
    ));
    let mut walled = empty_scene("walled", 30, 30, 0.1);
    for c in walled.grid.cells().collect::<Vec<_>>() {
        walled.grid.set_blocked(c, true);
    }
    assert!(gen_episodes(&walled, 2, 0, &sim, &cfg).is_err());
}
