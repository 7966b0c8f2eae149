use serde::{Deserialize, Serialize};

use crate::geometry::distance_bearing;
use crate::scene::{HumanModel, Scene};

pub const CONTEXT_RADIUS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub object_id: String,
    pub label: String,
    pub distance: f64,
    /// Bearing from the human's frame-0 heading, in `(-π, π]`.
    pub bearing: f64,
    pub relative_description: String,
}

/// Objects within `radius` of the human's base position, nearest first.
pub fn extract_context(scene: &Scene, human: &HumanModel, radius: f64) -> Vec<ContextEntry> {
    let heading = human.motion.frames.first().map_or(0.0, |f| f.heading);
    let mut out: Vec<ContextEntry> = scene
        .objects
        .iter()
        .filter_map(|o| {
            let (distance, bearing) = distance_bearing(&human.base_position, &o.position, heading);
            (distance <= radius).then(|| ContextEntry {
                object_id: o.id.clone(),
                label: o.label.clone(),
                distance,
                bearing,
                relative_description: format!("{distance:.2} meters at bearing {bearing:.2}"),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.object_id.cmp(&b.object_id))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{OccupancyGrid, Vec3};
    use crate::scene::{MotionSequence, NavGraph, SceneObject};

    fn scene_with(distances: &[f64]) -> (Scene, HumanModel) {
        let objects = distances
            .iter()
            .enumerate()
            .map(|(i, d)| SceneObject {
                id: format!("o{i}"),
                label: "lamp".into(),
                position: Vec3::new(1.0 + d, 1.0, 0.0),
                radius: 0.2,
            })
            .collect();
        let scene = Scene {
            id: "ctx".into(),
            grid: OccupancyGrid::new(Vec3::ZERO, 0.1, 100, 30).unwrap(),
            regions: vec![],
            objects,
            humans: vec![],
            nav_graph: NavGraph::default(),
        };
        let human = HumanModel {
            id: "h".into(),
            motion: MotionSequence::still(0.3),
            base_position: Vec3::new(1.0, 1.0, 0.0),
            region_id: "r".into(),
            group_id: None,
        };
        (scene, human)
    }

    #[test]
    fn radius_cut_and_order() {
        let (s, h) = scene_with(&[]);
        assert!(extract_context(&s, &h, CONTEXT_RADIUS).is_empty());
        let (s, h) = scene_with(&[7.0, 2.0]);
        let c = extract_context(&s, &h, CONTEXT_RADIUS);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].object_id, "o1");
        assert_eq!(c[0].relative_description, "2.00 meters at bearing 0.00");
        let (s, h) = scene_with(&[5.0, 1.0, 3.0]);
        let ids: Vec<_> = extract_context(&s, &h, CONTEXT_RADIUS)
            .into_iter()
            .map(|e| e.object_id)
            .collect();
        assert_eq!(ids, ["o1", "o2", "o0"]);
    }
}
