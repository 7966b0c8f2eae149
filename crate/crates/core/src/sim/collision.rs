use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec3};
use crate::scene::Scene;

use super::{CollisionMode, SimConfig};

/// Center distance to a human below which a collision counts toward the
/// human-collision tally.
pub const HUMAN_PROXIMITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionKind {
    Human,
    Object,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub kind: CollisionKind,
    pub entity_id: Option<String>,
    /// Center distance for humans and objects; distance to the blocked
    /// cell (or grid boundary) for static contacts.
    #[serde(rename = "distance")]
    pub distance_at_contact: f64,
    pub human_within_1m: bool,
}

struct Candidate<'a> {
    kind: CollisionKind,
    id: Option<&'a str>,
    distance: f64,
    clearance: f64,
}

fn deepest<'a>(best: &mut Option<Candidate<'a>>, c: Candidate<'a>) {
    if best.as_ref().is_none_or(|b| c.clearance < b.clearance) {
        *best = Some(c);
    }
}

fn obstacle_candidate<'a>(scene: &'a Scene, p: &Vec3, radius: f64) -> Option<Candidate<'a>> {
    let mut best = None;
    for obj in &scene.objects {
        let d = p.planar_distance(&obj.position);
        let reach = radius + obj.radius;
        if d < reach {
            deepest(
                &mut best,
                Candidate {
                    kind: CollisionKind::Object,
                    id: Some(&obj.id),
                    distance: d,
                    clearance: d - reach,
                },
            );
        }
    }
    if let Some((_, d)) = scene.grid.disc_overlap(p, radius) {
        deepest(
            &mut best,
            Candidate {
                kind: CollisionKind::Static,
                id: None,
                distance: d,
                clearance: d - radius,
            },
        );
    }
    best
}

/// Overlap between a disc and the scene's objects or blocked cells, ignoring
/// humans.
pub fn obstacle_overlap(scene: &Scene, center: &Vec3, radius: f64) -> Option<CollisionEvent> {
    obstacle_candidate(scene, center, radius).map(|c| CollisionEvent {
        kind: c.kind,
        entity_id: c.id.map(str::to_string),
        distance_at_contact: c.distance,
        human_within_1m: false,
    })
}

/// Deepest overlap of the agent disc with any human (at the frame implied by
/// `clock` processed signals), object, or blocked cell. Overlap is strict:
/// touching at exactly the sum of radii is not a collision.
pub fn check_collision(
    scene: &Scene,
    pose: &Pose,
    clock: u64,
    agent_radius: f64,
) -> Option<CollisionEvent> {
    let p = &pose.position;
    let mut best = obstacle_candidate(scene, p, agent_radius);
    let mut nearest_human = f64::INFINITY;
    for h in &scene.humans {
        let hp = h.position_after(clock);
        let d = p.planar_distance(&hp);
        nearest_human = nearest_human.min(d);
        let reach = agent_radius + h.radius();
        if d < reach {
            deepest(
                &mut best,
                Candidate {
                    kind: CollisionKind::Human,
                    id: Some(&h.id),
                    distance: d,
                    clearance: d - reach,
                },
            );
        }
    }
    best.map(|c| CollisionEvent {
        kind: c.kind,
        entity_id: c.id.map(str::to_string),
        distance_at_contact: c.distance,
        human_within_1m: nearest_human <= HUMAN_PROXIMITY,
    })
}

/// Checks a straight move from `from` to `to` at the granularity the config
/// asks for: the endpoint only, or every `substep_length` along the way.
/// `force_substeps` applies substep checking regardless of the mode.
pub fn sweep_collision(
    scene: &Scene,
    from: &Vec3,
    to: &Vec3,
    heading: f64,
    clock: u64,
    config: &SimConfig,
    force_substeps: bool,
) -> Option<CollisionEvent> {
    let len = from.planar_distance(to);
    let n = if force_substeps || config.collision_mode == CollisionMode::Substep {
        ((len / config.substep_length) - 1e-9).ceil().max(1.0) as usize
    } else {
        1
    };
    (1..=n).find_map(|k| {
        let p = if k == n {
            *to
        } else {
            *from + (*to - *from) * (k as f64 / n as f64)
        };
        check_collision(scene, &Pose::at(p, heading), clock, config.agent_radius)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cell, OccupancyGrid};
    use crate::scene::{HumanModel, MotionSequence, NavGraph, SceneObject};

    fn scene_with_human(at: Vec3, radius: f64) -> Scene {
        Scene {
            id: "c".into(),
            grid: OccupancyGrid::new(Vec3::ZERO, 0.1, 50, 50).unwrap(),
            regions: vec![],
            objects: vec![],
            humans: vec![HumanModel {
                id: "h".into(),
                motion: MotionSequence::still(radius),
                base_position: at,
                region_id: "r".into(),
                group_id: None,
            }],
            nav_graph: NavGraph::default(),
        }
    }

    #[test]
    fn sum_of_radii_rule() {
        let scene = scene_with_human(Vec3::new(2.45, 2.0, 0.0), 0.3);
        let ev = check_collision(&scene, &Pose::at(Vec3::new(2.0, 2.0, 0.0), 0.0), 0, 0.2).unwrap();
        assert_eq!(ev.kind, CollisionKind::Human);
        assert_eq!(ev.entity_id.as_deref(), Some("h"));
        assert!(ev.distance_at_contact < 0.5);
        assert!(ev.human_within_1m);
    }

    #[test]
    fn boundary_contact_is_not_collision() {
        // 0.2 + 0.3 rounds to exactly 0.5 and 2.5 - 2.0 is exact
        assert_eq!(0.2f64 + 0.3, 0.5);
        let scene = scene_with_human(Vec3::new(2.5, 2.0, 0.0), 0.3);
        assert!(check_collision(&scene, &Pose::at(Vec3::new(2.0, 2.0, 0.0), 0.0), 0, 0.2).is_none());
    }

    #[test]
    fn static_disc_cell_overlap() {
        let mut scene = scene_with_human(Vec3::new(4.0, 4.0, 0.0), 0.3);
        scene.grid.set_blocked(Cell::new(20, 20), true);
        // blocked cell spans x in [2.0, 2.1]; agent center 0.1 m left of it
        let ev = check_collision(&scene, &Pose::at(Vec3::new(1.9, 2.05, 0.0), 0.0), 0, 0.2).unwrap();
        assert_eq!(ev.kind, CollisionKind::Static);
        assert!((ev.distance_at_contact - 0.1).abs() < 1e-9);
        assert!(!ev.human_within_1m);
    }

    #[test]
    fn deepest_violation_wins() {
        let mut scene = scene_with_human(Vec3::new(2.4, 2.0, 0.0), 0.3);
        scene.objects.push(SceneObject {
            id: "o".into(),
            label: "chair".into(),
            position: Vec3::new(1.6, 2.0, 0.0),
            radius: 0.3,
        });
        let ev = check_collision(&scene, &Pose::at(Vec3::new(2.05, 2.0, 0.0), 0.0), 0, 0.2).unwrap();
        assert_eq!(ev.kind, CollisionKind::Human);
        let ev = check_collision(&scene, &Pose::at(Vec3::new(1.95, 2.0, 0.0), 0.0), 0, 0.2).unwrap();
        assert_eq!(ev.kind, CollisionKind::Object);
        assert!(ev.human_within_1m);
    }

    #[test]
    fn substeps_catch_what_endpoints_skip() {
        let scene = scene_with_human(Vec3::new(2.5, 2.0, 0.0), 0.3);
        let from = Vec3::new(1.4, 2.0, 0.0);
        let to = Vec3::new(3.4, 2.0, 0.0);
        let mut cfg = SimConfig {
            step_size: 2.0,
            ..SimConfig::default()
        };
        assert!(sweep_collision(&scene, &from, &to, 0.0, 0, &cfg, false).is_none());
        cfg.collision_mode = CollisionMode::Substep;
        assert!(sweep_collision(&scene, &from, &to, 0.0, 0, &cfg, false).is_some());
    }
}
