use serde::{Deserialize, Serialize};

use crate::geometry::{distance_bearing, in_fov, Vec3};
use crate::scene::{HumanModel, Scene};

use super::{Mode, SimConfig, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityStatus {
    pub frame_index: usize,
    pub moving: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanObservation {
    pub human_id: String,
    pub position: Vec3,
    pub d_agent: f64,
    pub theta_relative: f64,
    pub a_status: ActivityStatus,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectObservation {
    pub id: String,
    pub label: String,
    pub distance: f64,
    pub bearing: f64,
}

/// Symbolic egocentric observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: crate::geometry::Pose,
    pub visible_humans: Vec<HumanObservation>,
    pub visible_objects: Vec<ObjectObservation>,
    pub region_label: Option<String>,
    pub frame_index: usize,
    /// Discrete setting only: a visible human is closer than the social
    /// threshold.
    pub proximity_warning: bool,
}

fn human_observation(h: &HumanModel, state: &SimState) -> HumanObservation {
    let n = h.frame_count() as u64;
    let frame = (state.signals_processed % n) as usize;
    let position = h.base_position + h.motion.frames[frame].translation;
    let (d_agent, theta_relative) =
        distance_bearing(&state.agent.position, &position, state.agent.heading);
    HumanObservation {
        human_id: h.id.clone(),
        position,
        d_agent,
        theta_relative,
        a_status: ActivityStatus {
            frame_index: frame,
            moving: h.motion.is_moving_at(frame),
        },
        radius: h.radius(),
    }
}

fn visible(scene: &Scene, state: &SimState, target: &Vec3, fov: f64, range: f64) -> bool {
    in_fov(&state.agent, target, fov, range)
        && scene
            .grid
            .line_of_sight(&state.agent.position, target)
            .unwrap_or(false)
}

/// Entities within range, inside the field of view, and in line of sight.
/// Call after draining signals so humans sit at the current frame.
pub fn observe(state: &SimState, scene: &Scene, config: &SimConfig) -> Observation {
    let fov = config.effective_fov();
    let range = config.observe_range;
    let mut visible_humans: Vec<HumanObservation> = scene
        .humans
        .iter()
        .map(|h| human_observation(h, state))
        .filter(|o| o.d_agent <= range && visible(scene, state, &o.position, fov, range))
        .collect();
    sort_by_distance(&mut visible_humans);
    let mut visible_objects: Vec<ObjectObservation> = scene
        .objects
        .iter()
        .filter(|o| visible(scene, state, &o.position, fov, range))
        .map(|o| {
            let (distance, bearing) =
                distance_bearing(&state.agent.position, &o.position, state.agent.heading);
            ObjectObservation {
                id: o.id.clone(),
                label: o.label.clone(),
                distance,
                bearing,
            }
        })
        .collect();
    visible_objects.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.id.cmp(&b.id)));
    let proximity_warning = config.mode == Mode::Discrete
        && visible_humans
            .iter()
            .any(|h| h.d_agent < config.social_threshold_de);
    Observation {
        agent: state.agent,
        visible_humans,
        visible_objects,
        region_label: scene
            .region_at(&state.agent.position)
            .map(|r| r.label.clone()),
        frame_index: state.frame_index(config.frames_n),
        proximity_warning,
    }
}

fn sort_by_distance(v: &mut [HumanObservation]) {
    v.sort_by(|a, b| {
        a.d_agent
            .total_cmp(&b.d_agent)
            .then_with(|| a.human_id.cmp(&b.human_id))
    });
}

/// Ground-truth state of every human, ignoring field of view and occlusion.
pub fn human_states(state: &SimState, scene: &Scene) -> Vec<HumanObservation> {
    scene
        .humans
        .iter()
        .map(|h| human_observation(h, state))
        .collect()
}

/// Ground-truth states of humans within `radius`, nearest first.
pub fn query_human_states(state: &SimState, scene: &Scene, radius: f64) -> Vec<HumanObservation> {
    let mut out: Vec<_> = human_states(state, scene)
        .into_iter()
        .filter(|o| o.d_agent <= radius)
        .collect();
    sort_by_distance(&mut out);
    out
}
