//! The simulation core shared by the discrete (viewpoint graph) and
//! continuous (metric step) settings.
//!
//! Human playback follows a refresh-signal queue: a producer enqueues one
//! signal per frame interval (dropping signals while the queue is full) and
//! the agent drains the queue right before it observes. The current motion
//! frame of a human with an `N`-frame sequence is `signals_processed mod N`.
//! Time is a logical clock here: every action advances it by one action
//! period, so a run is fully determined by its inputs.

mod collision;
mod observe;
mod signals;
mod step;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_heading, GeometryError, Pose};

pub use collision::{check_collision, obstacle_overlap, sweep_collision, CollisionEvent, CollisionKind};
pub use observe::{
    human_states, observe, query_human_states, ActivityStatus, HumanObservation, ObjectObservation,
    Observation,
};
pub use signals::{drain_signals, tick_producer, SignalProducer};
pub use step::{apply_action, reset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Forward,
    Left,
    Right,
    Up,
    Down,
    Stop,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Forward,
        Action::Left,
        Action::Right,
        Action::Up,
        Action::Down,
        Action::Stop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Action::Forward => "forward",
            Action::Left => "left",
            Action::Right => "right",
            Action::Up => "up",
            Action::Down => "down",
            Action::Stop => "stop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Hops between viewpoint-graph nodes.
    #[serde(rename = "de")]
    Discrete,
    /// Metric steps in free space.
    #[default]
    #[serde(rename = "ce")]
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CollisionMode {
    /// Only the final pose of a move is checked.
    #[default]
    Endpoint,
    /// Every `substep_length` along a move is checked.
    Substep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub mode: Mode,
    pub step_size: f64,
    pub turn_angle: f64,
    /// Field of view for the continuous setting; the discrete setting is
    /// always panoramic.
    pub fov: f64,
    pub observe_range: f64,
    pub collision_mode: CollisionMode,
    pub substep_length: f64,
    pub agent_radius: f64,
    /// Distance below which a discrete-setting observation raises a
    /// proximity warning.
    pub social_threshold_de: f64,
    /// Seconds between refresh signals.
    pub frame_interval: f64,
    /// Logical seconds consumed by one action.
    pub action_period: f64,
    /// Reference sequence length used for the reported frame index.
    pub frames_n: usize,
    pub queue_max: usize,
    pub max_steps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: Mode::Continuous,
            step_size: 0.25,
            turn_angle: PI / 12.0,
            fov: FRAC_PI_2,
            observe_range: 10.0,
            collision_mode: CollisionMode::Endpoint,
            substep_length: 0.25,
            agent_radius: 0.2,
            social_threshold_de: 3.0,
            frame_interval: 1.0 / 30.0,
            action_period: 4.0 / 30.0,
            frames_n: 120,
            queue_max: 120,
            max_steps: 500,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        if !(self.turn_angle > 0.0 && self.turn_angle < PI) {
            return bad("turn_angle must lie in (0, π)");
        }
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return bad("fov must lie in (0, 2π]");
        }
        if !(self.substep_length > 0.0) {
            return bad("substep_length must be positive");
        }
        if self.collision_mode == CollisionMode::Substep && self.substep_length > self.step_size {
            return bad("substep_length must not exceed step_size");
        }
        if !(self.agent_radius > 0.0) {
            return bad("agent_radius must be positive");
        }
        if !(self.frame_interval > 0.0) || !(self.action_period >= 0.0) {
            return bad("frame_interval must be positive and action_period non-negative");
        }
        if self.frames_n == 0 || self.queue_max == 0 || self.max_steps == 0 {
            return bad("frames_n, queue_max and max_steps must be positive");
        }
        Ok(())
    }

    /// Field of view actually used for perception in this mode.
    pub fn effective_fov(&self) -> f64 {
        match self.mode {
            Mode::Discrete => TAU,
            Mode::Continuous => self.fov,
        }
    }

    /// Refresh signals produced during one action period.
    pub fn signals_per_action(&self) -> u64 {
        (self.action_period / self.frame_interval + 1e-9).floor() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Stopped,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub agent: Pose,
    pub signals_sent: u64,
    pub signals_processed: u64,
    pub queue_depth: usize,
    pub step_count: usize,
    /// Human collisions so far.
    pub collision_count: usize,
    /// Object and static-geometry collisions so far.
    pub obstacle_collisions: usize,
    pub status: Status,
    pub de_node: Option<String>,
    pub seed: u64,
    // heading and pitch are kept as whole turn counts so that opposite
    // rotations cancel exactly
    start_heading: f64,
    turns: i64,
    pitch_steps: i64,
}

impl SimState {
    pub(crate) fn new(agent: Pose, seed: u64) -> Self {
        SimState {
            agent,
            signals_sent: 0,
            signals_processed: 0,
            queue_depth: 0,
            step_count: 0,
            collision_count: 0,
            obstacle_collisions: 0,
            status: Status::Running,
            de_node: None,
            seed,
            start_heading: agent.heading,
            turns: 0,
            pitch_steps: 0,
        }
    }

    /// Frame index for the reference sequence length `n`.
    pub fn frame_index(&self, n: usize) -> usize {
        (self.signals_processed % n as u64) as usize
    }

    pub fn is_running(&self) -> bool {
        self.status == Status::Running
    }

    pub(crate) fn rotate(&mut self, delta_turns: i64, turn_angle: f64) {
        self.turns += delta_turns;
        self.agent.heading = normalize_heading(self.start_heading + self.turns as f64 * turn_angle);
    }

    pub(crate) fn tilt(&mut self, delta: i64, turn_angle: f64) {
        let limit = (FRAC_PI_2 / turn_angle + 1e-9).floor() as i64;
        self.pitch_steps = (self.pitch_steps + delta).clamp(-limit, limit);
        self.agent.pitch = (self.pitch_steps as f64 * turn_angle).clamp(-FRAC_PI_2, FRAC_PI_2);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepFlag {
    /// Discrete forward with no neighbor inside the heading gate.
    NoValidHop,
    /// Discrete setting: some visible human within the social threshold.
    ProximityWarning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Observation,
    pub collision: Option<CollisionEvent>,
    pub done: bool,
    pub reason: Status,
    pub flags: Vec<StepFlag>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("start pose: {0}")]
    StartOutside(#[from] GeometryError),
    #[error("start pose lies on a blocked cell")]
    StartBlocked,
    #[error("start pose collides at frame 0: {0:?}")]
    StartInCollision(CollisionEvent),
    #[error("discrete mode needs a non-empty navigation graph")]
    EmptyNavGraph,
    #[error("episode already finished ({0:?})")]
    EpisodeFinished(Status),
}
