//! Grid planning on a clearance-inflated copy of the scene grid: static A*,
//! an idealized follower that waits for and replans around scheduled human
//! motion, ground-truth episode annotation, and snapping of metric paths to
//! the viewpoint graph.
//!
//! The follower moves one cell per tick. A tick lasts as many refresh
//! signals as the agent needs to cover one cell at its step size, so human
//! frames advance on the same clock the simulator uses.

mod astar;
mod discrete;
mod truth;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Cell, OccupancyGrid, Pose, Vec3};
use crate::scene::Scene;
use crate::sim::{obstacle_overlap, SimConfig};

pub use astar::{astar, GridPath};
pub use discrete::{graph_shortest_path, map_to_discrete};
pub use truth::{annotate_ground_truth, plan_with_replanning};

pub(crate) use astar::{astar_by, step, MOVES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no path exists")]
    Unreachable,
    #[error("cell ({}, {}) lies outside the grid", .0.col, .0.row)]
    OutOfGrid(Cell),
    #[error("point ({:.3}, {:.3}) lies outside the grid", .0.x, .0.y)]
    OffGrid(Vec3),
    #[error("navigation graph is empty")]
    EmptyNavGraph,
    #[error("waypoint {index} at ({:.3}, {:.3}) has no node within {radius} m", .position.x, .position.y)]
    NoNodeNear {
        index: usize,
        position: Vec3,
        radius: f64,
    },
    #[error("nodes `{0}` and `{1}` are not connected")]
    Disconnected(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub waypoints: Vec<Vec3>,
    /// Meters.
    pub length: f64,
    pub replans: usize,
    pub unavoidable_encounters: usize,
    pub reachable: bool,
}

impl PlanResult {
    pub fn unreachable() -> Self {
        PlanResult {
            waypoints: Vec::new(),
            length: 0.0,
            replans: 0,
            unavoidable_encounters: 0,
            reachable: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HumanInfluence {
    Direct,
    Indirect,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: String,
    pub scene_id: String,
    pub start: Pose,
    pub goal: Vec3,
    #[serde(default)]
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_path: Option<PlanResult>,
    #[serde(default)]
    pub human_influence: HumanInfluence,
    #[serde(default)]
    pub unavoidable_encounters: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl EpisodeSpec {
    pub fn new(id: impl Into<String>, scene_id: impl Into<String>, start: Pose, goal: Vec3) -> Self {
        EpisodeSpec {
            id: id.into(),
            scene_id: scene_id.into(),
            start,
            goal,
            instruction: String::new(),
            gt_path: None,
            human_influence: HumanInfluence::None,
            unavoidable_encounters: 0,
            metadata: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Extra clearance beyond the agent radius kept from walls and objects.
    pub clearance_margin: f64,
    /// Extra clearance beyond the two radii kept from humans.
    pub human_margin: f64,
    /// Ticks spent waiting on a blocked cell before replanning.
    pub wait_patience: usize,
    pub snap_radius: f64,
    /// Edge-to-waypoint distance under which a human influences a path
    /// directly.
    pub influence_distance: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            clearance_margin: 0.1,
            human_margin: 0.1,
            wait_patience: 8,
            snap_radius: 1.0,
            influence_distance: 1.0,
        }
    }
}

/// Cells whose centers lie strictly within `radius` of `center`, as sorted
/// indices.
pub(crate) fn disc_cells(grid: &OccupancyGrid, center: &Vec3, radius: f64) -> Vec<usize> {
    let cs = grid.cell_size();
    let o = grid.origin();
    let lo_c = (((center.x - radius - o.x) / cs).floor().max(0.0)) as usize;
    let lo_r = (((center.y - radius - o.y) / cs).floor().max(0.0)) as usize;
    let hi_c = ((center.x + radius - o.x) / cs).ceil();
    let hi_r = ((center.y + radius - o.y) / cs).ceil();
    if hi_c < 0.0 || hi_r < 0.0 {
        return Vec::new();
    }
    let hi_c = (hi_c as usize).min(grid.width().saturating_sub(1));
    let hi_r = (hi_r as usize).min(grid.height().saturating_sub(1));
    let mut out = Vec::new();
    for row in lo_r..=hi_r {
        for col in lo_c..=hi_c {
            let c = Cell::new(col, row);
            if grid.cell_center(c).planar_distance(center) < radius {
                out.push(grid.index(c));
            }
        }
    }
    out
}

/// Copy of the scene grid where every cell whose center is closer than
/// `clearance` to a blocked cell, the grid edge, or an object is blocked.
pub fn planning_grid(scene: &Scene, clearance: f64) -> OccupancyGrid {
    let mut grid = scene.grid.clone();
    for c in scene.grid.cells() {
        if scene.grid.is_free(c)
            && obstacle_overlap(scene, &scene.grid.cell_center(c), clearance).is_some()
        {
            grid.set_blocked(c, true);
        }
    }
    grid
}

/// Per-frame cells covered by one human's inflated disc.
pub(crate) struct HumanTrack {
    pub frames: Vec<Vec<usize>>,
    pub swept: HashSet<usize>,
}

impl HumanTrack {
    pub fn covers(&self, frame: usize, idx: usize) -> bool {
        self.frames[frame].binary_search(&idx).is_ok()
    }
}

/// Precomputed planning state for one scene and configuration.
pub struct Planner<'a> {
    pub(crate) scene: &'a Scene,
    pub(crate) sim: SimConfig,
    pub(crate) cfg: PlannerConfig,
    pub(crate) grid: OccupancyGrid,
    pub(crate) tracks: Vec<HumanTrack>,
    /// Refresh signals per one-cell move.
    pub(crate) signals_per_cell: u64,
}

impl<'a> Planner<'a> {
    pub fn new(scene: &'a Scene, sim: &SimConfig, cfg: &PlannerConfig) -> Self {
        let grid = planning_grid(scene, sim.agent_radius + cfg.clearance_margin);
        let tracks = scene
            .humans
            .iter()
            .map(|h| {
                let r = h.radius() + sim.agent_radius + cfg.human_margin;
                let frames: Vec<Vec<usize>> = h
                    .playback_positions()
                    .map(|p| disc_cells(&scene.grid, &p, r))
                    .collect();
                let swept = frames.iter().flatten().copied().collect();
                HumanTrack { frames, swept }
            })
            .collect();
        let per_action = sim.signals_per_action() as f64;
        let signals_per_cell = (per_action * scene.grid.cell_size() / sim.step_size)
            .round()
            .max(1.0) as u64;
        Planner {
            scene,
            sim: sim.clone(),
            cfg: cfg.clone(),
            grid,
            tracks,
            signals_per_cell,
        }
    }

    /// The clearance-inflated grid plans are computed on.
    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn cell_of(&self, p: &Vec3) -> Result<usize, PlanError> {
        self.grid
            .try_cell(p)
            .map(|c| self.grid.index(c))
            .ok_or(PlanError::OffGrid(*p))
    }

    /// Static shortest path between two points, avoiding `extra` cells.
    pub fn plan(&self, from: &Vec3, to: &Vec3, extra: &HashSet<usize>) -> Result<GridPath, PlanError> {
        let (a, b) = (self.cell_of(from)?, self.cell_of(to)?);
        astar_by(&self.grid, a, b, |i| {
            self.grid.is_blocked(self.grid.cell_at(i)) || extra.contains(&i)
        })
        .ok_or(PlanError::Unreachable)
    }

    pub fn to_result(&self, path: &GridPath) -> PlanResult {
        PlanResult {
            waypoints: path
                .cells
                .iter()
                .map(|c| self.grid.cell_center(*c))
                .collect(),
            length: path.cost() * self.grid.cell_size(),
            replans: 0,
            unavoidable_encounters: 0,
            reachable: true,
        }
    }

    /// Tick budget matching the simulator's step budget.
    pub(crate) fn tick_budget(&self) -> u64 {
        self.sim.max_steps as u64 * self.sim.signals_per_action() / self.signals_per_cell
    }

    pub(crate) fn frame_at(&self, human: usize, clock: u64) -> usize {
        (clock % self.tracks[human].frames.len() as u64) as usize
    }

    /// Cells covered by the inflated disc of human `h` at `center`.
    pub fn human_cells(&self, center: &Vec3, radius: f64) -> Vec<usize> {
        disc_cells(&self.grid, center, radius + self.sim.agent_radius + self.cfg.human_margin)
    }
}
