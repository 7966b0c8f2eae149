use thiserror::Error;

use crate::geometry::Vec3;
use crate::scene::{HumanModel, Scene};
use crate::sim::obstacle_overlap;

/// Lattice spacing of the nudge search.
pub const NUDGE_STEP: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("human `{human}` has no collision-free pose within {max_nudge} m")]
    NoCleanPose { human: String, max_nudge: f64 },
}

/// Horizontal offsets on the nudge lattice within `max_nudge`, nearest first
/// and then counter-clockwise from +x.
fn spiral(max_nudge: f64) -> Vec<(f64, f64)> {
    let k = (max_nudge / NUDGE_STEP + 1e-9).floor() as i64;
    let mut out: Vec<(i64, i64)> = (-k..=k)
        .flat_map(|i| (-k..=k).map(move |j| (i, j)))
        .filter(|&(i, j)| ((i * i + j * j) as f64).sqrt() * NUDGE_STEP <= max_nudge + 1e-12)
        .collect();
    let angle = |&(i, j): &(i64, i64)| (j as f64).atan2(i as f64).rem_euclid(std::f64::consts::TAU);
    out.sort_by(|a, b| {
        (a.0 * a.0 + a.1 * a.1)
            .cmp(&(b.0 * b.0 + b.1 * b.1))
            .then_with(|| angle(a).total_cmp(&angle(b)))
    });
    out.into_iter()
        .map(|(i, j)| (i as f64 * NUDGE_STEP, j as f64 * NUDGE_STEP))
        .collect()
}

fn is_clean(scene: &Scene, human: &HumanModel, base: &Vec3) -> bool {
    if let Some(region) = scene.region(&human.region_id) {
        if !region.bbox.contains_planar(base) {
            return false;
        }
    }
    let r = human.radius();
    human
        .motion
        .frames
        .iter()
        .all(|f| obstacle_overlap(scene, &(*base + f.translation), r).is_none())
}

/// Nudges the human's base position in small horizontal steps, nearest
/// first, until its disc clears every object and blocked cell at every
/// motion frame. Returns the position unchanged when it is already clean.
pub fn refine_placement(
    scene: &Scene,
    human: &HumanModel,
    max_nudge: f64,
) -> Result<Vec3, RefineError> {
    spiral(max_nudge.max(0.0))
        .into_iter()
        .map(|(dx, dy)| human.base_position + Vec3::new(dx, dy, 0.0))
        .find(|p| is_clean(scene, human, p))
        .ok_or_else(|| RefineError::NoCleanPose {
            human: human.id.clone(),
            max_nudge,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BBox, Cell, OccupancyGrid};
    use crate::scene::{MotionFrame, MotionSequence, NavGraph, Region, SceneObject};

    fn scene() -> Scene {
        Scene {
            id: "r".into(),
            grid: OccupancyGrid::new(Vec3::ZERO, 0.1, 40, 40).unwrap(),
            regions: vec![Region {
                id: "room".into(),
                label: "office".into(),
                bbox: BBox::new(Vec3::ZERO, Vec3::new(4.0, 4.0, 0.0)),
                object_ids: vec![],
            }],
            objects: vec![SceneObject {
                id: "desk".into(),
                label: "desk".into(),
                position: Vec3::new(2.0, 2.0, 0.0),
                radius: 0.4,
            }],
            humans: vec![],
            nav_graph: NavGraph::default(),
        }
    }

    fn pacing(at: Vec3) -> HumanModel {
        HumanModel {
            id: "h".into(),
            motion: MotionSequence {
                frames: (0..10)
                    .map(|k| MotionFrame {
                        translation: Vec3::new(0.0, 0.03 * k as f64, 0.0),
                        heading: 0.0,
                    })
                    .collect(),
                radius: 0.3,
                description: String::new(),
                region_label: String::new(),
            },
            base_position: at,
            region_id: "room".into(),
            group_id: None,
        }
    }

    /// Independent overlap check: brute-force distances to the object and
    /// every blocked cell.
    fn overlaps(scene: &Scene, h: &HumanModel, base: Vec3) -> bool {
        h.motion.frames.iter().any(|f| {
            let p = base + f.translation;
            scene
                .objects
                .iter()
                .any(|o| p.planar_distance(&o.position) < o.radius + h.radius())
                || scene.grid.cells().any(|c| {
                    scene.grid.is_blocked(c) && scene.grid.distance_to_cell(&p, c) < h.radius()
                })
        })
    }

    #[test]
    fn clean_placement_is_fixed_point() {
        let s = scene();
        let h = pacing(Vec3::new(1.0, 1.0, 0.0));
        assert_eq!(refine_placement(&s, &h, 1.0).unwrap(), h.base_position);
    }

    #[test]
    fn overlap_is_nudged_out() {
        let s = scene();
        // frame 0 sits 0.6 m left of the desk: 0.1 m inside the sum of radii
        let h = pacing(Vec3::new(1.4, 1.73, 0.0));
        assert!(overlaps(&s, &h, h.base_position));
        let p = refine_placement(&s, &h, 1.0).unwrap();
        assert!(!overlaps(&s, &h, p));
        assert!(p.planar_distance(&h.base_position) <= 0.2 + 1e-9);
        let mut check = s.clone();
        check.humans.clear();
        for f in &h.motion.frames {
            let pose = crate::geometry::Pose::at(p + f.translation, 0.0);
            assert!(crate::sim::check_collision(&check, &pose, 0, h.radius()).is_none());
        }
    }

    #[test]
    fn enclosed_human_has_no_clean_pose() {
        let mut s = scene();
        s.objects.clear();
        for c in 0..40 {
            for r in 0..40 {
                let far = (c as i64 - 10).abs() > 2 || (r as i64 - 10).abs() > 2;
                if far {
                    s.grid.set_blocked(Cell::new(c, r), true);
                }
            }
        }
        let h = pacing(Vec3::new(1.05, 1.05, 0.0));
        assert!(matches!(
            refine_placement(&s, &h, 0.5),
            Err(RefineError::NoCleanPose { .. })
        ));
    }

    #[test]
    fn spiral_is_nearest_first() {
        let s = spiral(0.2);
        assert_eq!(s[0], (0.0, 0.0));
        let norms: Vec<f64> = s.iter().map(|(x, y)| x.hypot(*y)).collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        assert!(norms.iter().all(|n| *n <= 0.2 + 1e-12));
    }
}
