//! Scripted baseline policies.
//!
//! Every policy reads the latest observation and emits one of the six
//! simulator actions. The action space has no no-op, so waiting is a Left
//! immediately undone by a Right; both halves carry the `wait` flag.

mod navigator;
mod policies;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{EpisodeSpec, PlanError, PlannerConfig};
use crate::scene::Scene;
use crate::sim::{Action, CollisionEvent, Observation, SimConfig};

pub use policies::{Greedy, OracleFollower, Random, Reactive};

/// Center distance under which a human ahead makes the oracle wait.
pub const WAIT_DISTANCE: f64 = 1.0;
/// Extra inflation around observed humans used by the reactive policy.
pub const SOCIAL_MARGIN: f64 = 0.2;
/// Policies stop once this close to the goal.
pub const STOP_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Oracle,
    Greedy,
    Reactive,
    Random,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::Oracle,
        AgentKind::Greedy,
        AgentKind::Reactive,
        AgentKind::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Oracle => "oracle",
            AgentKind::Greedy => "greedy",
            AgentKind::Reactive => "reactive",
            AgentKind::Random => "random",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| AgentError::UnknownAgent(s.to_string()))
    }
}

/// What a policy sees before each action.
pub struct AgentContext<'a> {
    pub scene: &'a Scene,
    pub episode: &'a EpisodeSpec,
    pub observation: &'a Observation,
    pub config: &'a SimConfig,
    /// Actions taken so far in this episode.
    pub step: usize,
    pub last_collision: Option<&'a CollisionEvent>,
    /// Current viewpoint in the discrete setting.
    pub de_node: Option<&'a str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionFlag {
    Wait,
    /// The policy found no route and gave up.
    NoPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub action: Action,
    pub flag: Option<DecisionFlag>,
}

impl Decision {
    pub fn act(action: Action) -> Self {
        Decision { action, flag: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("unknown agent `{0}` (expected oracle, greedy, reactive or random)")]
    UnknownAgent(String),
    #[error("episode `{0}` has no ground-truth path")]
    MissingGroundTruth(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

pub trait Policy {
    fn kind(&self) -> AgentKind;
    fn act(&mut self, ctx: &AgentContext) -> Result<Decision, AgentError>;
}

/// Builds a policy for one episode.
pub fn make_policy<'a>(
    kind: AgentKind,
    scene: &'a Scene,
    episode: &EpisodeSpec,
    sim: &SimConfig,
    planner: &PlannerConfig,
    seed: u64,
) -> Result<Box<dyn Policy + 'a>, AgentError> {
    Ok(match kind {
        AgentKind::Oracle => Box::new(OracleFollower::new(scene, episode, sim, planner)?),
        AgentKind::Greedy => Box::new(Greedy::new(scene, episode, sim, planner)),
        AgentKind::Reactive => Box::new(Reactive::new(scene, episode, sim, planner)),
        AgentKind::Random => Box::new(Random::new(seed)),
    })
}
