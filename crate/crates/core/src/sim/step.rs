use crate::geometry::{distance_bearing, Pose, Vec3};
use crate::scene::Scene;

use super::collision::{check_collision, sweep_collision, CollisionKind};
use super::observe::{observe, Observation};
use super::signals::{drain_signals, tick_producer};
use super::{Action, Mode, SimConfig, SimError, SimState, Status, StepFlag, StepResult};

/// Starts an episode: counters and the signal queue are cleared so humans
/// restart at frame 0. In the discrete setting the agent snaps to the
/// nearest viewpoint node.
pub fn reset(
    scene: &Scene,
    start: Pose,
    config: &SimConfig,
    seed: u64,
) -> Result<(SimState, Observation), SimError> {
    config.validate()?;
    let mut pose = Pose::new(start.position, start.heading, start.pitch);
    let mut de_node = None;
    if config.mode == Mode::Discrete {
        let (id, _) = scene
            .nav_graph
            .nearest(&pose.position)
            .ok_or(SimError::EmptyNavGraph)?;
        pose.position = scene.nav_graph.nodes[id];
        de_node = Some(id.to_string());
    }
    let cell = scene.grid.world_to_cell(&pose.position)?;
    if scene.grid.is_blocked(cell) {
        return Err(SimError::StartBlocked);
    }
    if let Some(ev) = check_collision(scene, &pose, 0, config.agent_radius) {
        return Err(SimError::StartInCollision(ev));
    }
    let mut state = SimState::new(pose, seed);
    state.de_node = de_node;
    drain_signals(&mut state, config);
    let obs = observe(&state, scene, config);
    Ok((state, obs))
}

/// Neighbor of the current node best aligned with the heading, if any lies
/// within `±turn_angle`.
fn discrete_hop(state: &SimState, scene: &Scene, config: &SimConfig) -> Option<(String, Vec3)> {
    let graph = &scene.nav_graph;
    let here_id = state.de_node.as_deref()?;
    let here = graph.position(here_id)?;
    graph
        .neighbors(here_id)
        .filter_map(|(id, len)| {
            let p = graph.position(id)?;
            let (_, bearing) = distance_bearing(&here, &p, state.agent.heading);
            (bearing.abs() <= config.turn_angle + 1e-12).then_some((id, p, bearing.abs(), len))
        })
        .min_by(|a, b| {
            a.2.total_cmp(&b.2)
                .then_with(|| a.3.total_cmp(&b.3))
                .then_with(|| a.0.cmp(b.0))
        })
        .map(|(id, p, _, _)| (id.to_string(), p))
}

/// Applies one action. Moves are checked against humans at the frame the
/// agent last observed; on any collision the pose is left untouched. Time
/// then advances by one action period and pending signals are drained
/// before the next observation.
pub fn apply_action(
    state: &mut SimState,
    scene: &Scene,
    action: Action,
    config: &SimConfig,
) -> Result<StepResult, SimError> {
    if state.status != Status::Running {
        return Err(SimError::EpisodeFinished(state.status));
    }
    let clock = state.signals_processed;
    let mut collision = None;
    let mut flags = Vec::new();
    match action {
        Action::Left => state.rotate(-1, config.turn_angle),
        Action::Right => state.rotate(1, config.turn_angle),
        Action::Up => state.tilt(1, config.turn_angle),
        Action::Down => state.tilt(-1, config.turn_angle),
        Action::Stop => state.status = Status::Stopped,
        Action::Forward => {
            let from = state.agent.position;
            let heading = state.agent.heading;
            match config.mode {
                Mode::Continuous => {
                    let to = from + Vec3::from_heading(heading) * config.step_size;
                    match sweep_collision(scene, &from, &to, heading, clock, config, false) {
                        Some(ev) => collision = Some(ev),
                        None => state.agent.position = to,
                    }
                }
                Mode::Discrete => match discrete_hop(state, scene, config) {
                    None => flags.push(StepFlag::NoValidHop),
                    Some((id, to)) => {
                        match sweep_collision(scene, &from, &to, heading, clock, config, true) {
                            Some(ev) => collision = Some(ev),
                            None => {
                                state.agent.position = to;
                                state.de_node = Some(id);
                            }
                        }
                    }
                },
            }
        }
    }
    if let Some(ev) = &collision {
        match ev.kind {
            CollisionKind::Human => state.collision_count += 1,
            _ => state.obstacle_collisions += 1,
        }
    }
    state.step_count += 1;
    tick_producer(state, config.action_period, config);
    drain_signals(state, config);
    if state.status == Status::Running && state.step_count >= config.max_steps {
        state.status = Status::Truncated;
    }
    let observation = observe(state, scene, config);
    if observation.proximity_warning {
        flags.push(StepFlag::ProximityWarning);
    }
    Ok(StepResult {
        observation,
        collision,
        done: state.status != Status::Running,
        reason: state.status,
        flags,
    })
}
