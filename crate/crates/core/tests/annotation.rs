mod common;

use std::f64::consts::PI;

use havln::annotation::{
    build_camera_rig, constraint_violations, extract_context, fitness, pso_place, refine_placement, PlacementError,
    PlacementProblem, PsoParams, RefineError, NUDGE_STEP,
};
use havln::sim::obstacle_overlap;
use havln::{seed, BBox, Cell, Region, SceneObject, Vec3};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn obj(id: &str, x: f64, y: f64) -> SceneObject {
    SceneObject {
        id: id.into(),
        label: id.into(),
        position: Vec3::new(x, y, 0.0),
        radius: 0.3,
    }
}

fn room(w: f64, h: f64) -> Region {
    Region {
        id: "r".into(),
        label: "kitchen".into(),
        bbox: BBox::new(Vec3::ZERO, Vec3::new(w, h, 0.0)),
        object_ids: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Whatever the swarm returns satisfies every constraint, and it never
    /// gives up while a comfortably feasible spot exists.
    #[test]
    fn swarm_output_is_feasible(seed_v in any::<u64>()) {
        let mut rng = seed::rng(seed_v);
        let (w, h) = (rng.gen_range(2.0..6.0), rng.gen_range(2.0..6.0));
        let target = obj("t", rng.gen_range(0.2..w - 0.2), rng.gen_range(0.2..h - 0.2));
        let others: Vec<SceneObject> = (0..rng.gen_range(0..5))
            .map(|k| obj(&format!("o{k}"), rng.gen_range(0.0..w), rng.gen_range(0.0..h)))
            .collect();
        let problem = PlacementProblem::new(room(w, h), target.clone(), others.clone());
        let params = PsoParams { seed: seed_v, ..PsoParams::default() };
        match pso_place(&problem, &params) {
            Ok(p) => {
                prop_assert!(p.distance(&target.position) <= 1.0);
                prop_assert!(others.iter().all(|o| p.distance(&o.position) >= 1.0));
                prop_assert!(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h);
                prop_assert!(constraint_violations(&p, &problem).is_empty());
            }
            Err(PlacementError::Infeasible { .. }) => {
                // a feasible disc of radius 0.1 is too large for the swarm to miss
                let roomy = |p: &Vec3| {
                    p.distance(&target.position) <= 0.9
                        && others.iter().all(|o| p.distance(&o.position) >= 1.1)
                        && p.x >= 0.1 && p.y >= 0.1 && p.x <= w - 0.1 && p.y <= h - 0.1
                };
                for i in 0..=((w / 0.02) as usize) {
                    for j in 0..=((h / 0.02) as usize) {
                        let p = Vec3::new(i as f64 * 0.02, j as f64 * 0.02, 0.0);
                        prop_assert!(!roomy(&p), "missed feasible point {:?}", p);
                    }
                }
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn fitness_is_distance_when_feasible(x in 0.0f64..4.0, y in 0.0f64..4.0) {
        let problem = PlacementProblem::new(room(4.0, 4.0), obj("t", 2.0, 2.0), vec![]);
        let p = Vec3::new(x, y, 0.0);
        let f = fitness(&p, &problem);
        if constraint_violations(&p, &problem).is_empty() {
            prop_assert!((f - p.distance(&problem.target.position)).abs() < 1e-12);
        } else {
            prop_assert!(f >= 10.0);
        }
    }

    #[test]
    fn camera_ring_geometry(x in -5.0f64..5.0, y in -5.0f64..5.0, eps in 0.1f64..3.0, dz in 0.1f64..3.0) {
        let p = Vec3::new(x, y, 0.0);
        let rig = build_camera_rig(p, eps, dz);
        for (k, cam) in rig.cameras[..8].iter().enumerate() {
            let i = k + 1;
            prop_assert!((cam.theta_lr - PI * i as f64 / 8.0).abs() < 1e-12);
            prop_assert!((cam.position.planar_distance(&p) - 2f64.sqrt() * eps).abs() < 1e-9);
            // each ring camera looks through the human
            let look = Vec3::from_heading(cam.theta_lr);
            let to_h = p - cam.position;
            prop_assert!((look.x * to_h.x + look.y * to_h.y - to_h.planar_norm()).abs() < 1e-9);
        }
        prop_assert!((rig.cameras[8].position.z - dz).abs() < 1e-12);
    }

    /// Refinement returns the nearest clean lattice offset: nothing closer
    /// on the lattice is clean.
    #[test]
    fn refinement_picks_the_nearest_clean_offset(seed_v in any::<u64>()) {
        let mut rng = seed::rng(seed_v);
        let mut scene = empty_scene("s", 40, 40, 0.1);
        for _ in 0..40 {
            scene.grid.set_blocked(Cell::new(rng.gen_range(10..30), rng.gen_range(10..30)), true);
        }
        scene.objects.push(obj("o", rng.gen_range(1.5..2.5), rng.gen_range(1.5..2.5)));
        let human = shuttle_human("h", Vec3::new(2.0, 2.0, 0.0), Vec3::new(2.3, 2.1, 0.0), 40);
        let clean = |b: &Vec3| {
            b.x >= 0.0 && b.y >= 0.0 && b.x <= 4.0 && b.y <= 4.0
                && human.motion.frames.iter().all(|f| obstacle_overlap(&scene, &(*b + f.translation), 0.3).is_none())
        };
        match refine_placement(&scene, &human, 1.0) {
            Ok(p) => {
                prop_assert!(clean(&p));
                let best = (p - human.base_position).planar_norm();
                let k = (1.0 / NUDGE_STEP) as i64;
                for i in -k..=k {
                    for j in -k..=k {
                        let off = Vec3::new(i as f64 * NUDGE_STEP, j as f64 * NUDGE_STEP, 0.0);
                        if off.planar_norm() < best - 1e-9 {
                            prop_assert!(!clean(&(human.base_position + off)));
                        }
                    }
                }
            }
            Err(RefineError::NoCleanPose { .. }) => {}
        }
    }
}

#[test]
fn context_is_sorted_and_bounded() {
    let mut scene = empty_scene("s", 100, 100, 0.1);
    scene.objects = vec![obj("far", 9.5, 5.0), obj("b", 5.0, 7.0), obj("a", 7.0, 5.0), obj("out", 5.0, 11.5)];
    let human = still_human("h", Vec3::new(5.0, 5.0, 0.0));
    let ctx = extract_context(&scene, &human, 6.0);
    let ids: Vec<&str> = ctx.iter().map(|c| c.object_id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "far"]);
    assert!((ctx[1].bearing - PI / 2.0).abs() < 1e-12);
    assert_eq!(ctx[0].relative_description, "2.00 meters at bearing 0.00");
}
