use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;

use crate::geometry::{distance_bearing, Pose, Vec3};
use crate::planner::{graph_shortest_path, step, Planner, MOVES};
use crate::scene::{NavGraph, Scene};
use crate::sim::{obstacle_overlap, Action, CollisionMode, Mode, SimConfig};

use super::STOP_DISTANCE;

/// Closest pursuit target considered, in meters.
const MIN_LOOKAHEAD: f64 = 0.4;
/// How far ahead along the path the progress marker may jump per step.
const PROGRESS_WINDOW: usize = 40;

#[derive(PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Geodesic distance to `goal` over the scene's own free cells.
fn distance_field(scene: &Scene, goal: &Vec3) -> Vec<f64> {
    let grid = &scene.grid;
    let mut dist = vec![f64::INFINITY; grid.len()];
    let Some(g) = grid.try_cell(goal) else {
        return dist;
    };
    let blocked = |i: usize| grid.is_blocked(grid.cell_at(i));
    let g = grid.index(g);
    dist[g] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Cost(0.0), g)));
    while let Some(Reverse((Cost(d), i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        for mv in MOVES {
            if let Some(j) = step(grid, i, mv, &blocked) {
                let w = if mv.0 != 0 && mv.1 != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let nd = d + w;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Reverse((Cost(nd), j)));
                }
            }
        }
    }
    dist
}

/// Whether a forward move with `heading` stays clear of walls and objects at
/// the points the simulator will check.
pub(crate) fn forward_clear(scene: &Scene, pose: &Pose, heading: f64, cfg: &SimConfig) -> bool {
    let from = pose.position;
    let to = from + Vec3::from_heading(heading) * cfg.step_size;
    let n = match cfg.collision_mode {
        CollisionMode::Endpoint => 1,
        CollisionMode::Substep => ((cfg.step_size / cfg.substep_length) - 1e-9).ceil().max(1.0) as usize,
    };
    (1..=n).all(|k| {
        let p = from + (to - from) * (k as f64 / n as f64);
        scene.grid.contains_point(&p) && obstacle_overlap(scene, &p, cfg.agent_radius).is_none()
    })
}

pub(crate) fn turn_toward(bearing: f64) -> Action {
    if bearing > 0.0 {
        Action::Right
    } else {
        Action::Left
    }
}

/// Path following shared by the planning policies: pure pursuit along a
/// waypoint list in the continuous setting, node-to-node routing in the
/// discrete one.
pub(crate) struct Navigator {
    waypoints: Vec<Vec3>,
    progress: usize,
    goal: Vec3,
    /// Turns still owed before a committed forward move around an obstacle.
    detour: Option<i64>,
    replan: bool,
    field: Option<Vec<f64>>,
    route: Vec<String>,
}

impl Navigator {
    pub fn new(waypoints: Vec<Vec3>, goal: Vec3) -> Self {
        Navigator {
            waypoints,
            progress: 0,
            goal,
            detour: None,
            replan: false,
            field: None,
            route: Vec::new(),
        }
    }

    pub fn set_path(&mut self, waypoints: Vec<Vec3>) {
        self.waypoints = waypoints;
        self.progress = 0;
        self.detour = None;
    }

    pub fn set_route(&mut self, route: Vec<String>) {
        self.route = route;
    }

    /// Inside `s / (2 cos(turn/2))` no forward step with the heading off by
    /// up to half a turn gets closer to the goal, so a longer step would
    /// only overshoot back and forth.
    pub fn stop_radius(cfg: &SimConfig) -> f64 {
        STOP_DISTANCE.max(cfg.step_size / (2.0 * (cfg.turn_angle / 2.0).cos()))
    }

    pub fn at_goal(&self, pose: &Pose, cfg: &SimConfig) -> bool {
        pose.position.planar_distance(&self.goal) <= Self::stop_radius(cfg)
    }

    fn lookahead(cfg: &SimConfig) -> f64 {
        cfg.step_size.max(MIN_LOOKAHEAD)
    }

    fn advance(&mut self, pose: &Pose) {
        let end = (self.progress + PROGRESS_WINDOW).min(self.waypoints.len());
        if let Some(k) = (self.progress..end).min_by(|a, b| {
            let da = pose.position.planar_distance(&self.waypoints[*a]);
            let db = pose.position.planar_distance(&self.waypoints[*b]);
            da.total_cmp(&db).then_with(|| a.cmp(b))
        }) {
            self.progress = k;
        }
    }

    fn target(&mut self, pose: &Pose, cfg: &SimConfig) -> Vec3 {
        self.advance(pose);
        let look = Self::lookahead(cfg);
        self.waypoints[self.progress..]
            .iter()
            .find(|w| pose.position.planar_distance(w) >= look)
            .copied()
            .unwrap_or(self.goal)
    }

    /// Path points within `span` meters of arc length ahead of the agent.
    pub fn upcoming(&mut self, pose: &Pose, span: f64) -> Vec<Vec3> {
        self.advance(pose);
        let mut out = Vec::new();
        let mut acc = 0.0;
        let mut prev = pose.position;
        for w in self.waypoints.iter().skip(self.progress) {
            acc += prev.planar_distance(w);
            if acc > span {
                break;
            }
            out.push(*w);
            prev = *w;
        }
        out
    }

    /// Heading offset (in whole turns) whose forward move is clear and lands
    /// closest to the goal by geodesic distance.
    fn best_detour(&mut self, scene: &Scene, pose: &Pose, cfg: &SimConfig) -> Option<i64> {
        let goal = self.goal;
        let field = self.field.get_or_insert_with(|| distance_field(scene, &goal));
        let half = (PI / cfg.turn_angle).ceil() as i64;
        (-half..=half)
            .filter_map(|k| {
                let h = pose.heading + k as f64 * cfg.turn_angle;
                let landing = pose.position + Vec3::from_heading(h) * cfg.step_size;
                let cell = scene.grid.try_cell(&landing)?;
                let score = field[scene.grid.index(cell)];
                (score.is_finite() && forward_clear(scene, pose, h, cfg)).then_some((k, score))
            })
            .min_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then_with(|| a.0.abs().cmp(&b.0.abs()))
                    .then_with(|| a.0.cmp(&b.0))
            })
            .map(|(k, _)| k)
    }

    fn take_detour_turn(&mut self) -> Option<Action> {
        let k = self.detour?;
        Some(if k == 0 {
            self.detour = None;
            self.replan = true;
            Action::Forward
        } else if k > 0 {
            self.detour = Some(k - 1);
            Action::Right
        } else {
            self.detour = Some(k + 1);
            Action::Left
        })
    }

    /// Continuous-setting locomotion toward the goal along the current path.
    pub fn steer(&mut self, scene: &Scene, planner: &Planner, pose: &Pose, cfg: &SimConfig) -> Action {
        if self.at_goal(pose, cfg) {
            return Action::Stop;
        }
        if let Some(a) = self.take_detour_turn() {
            return a;
        }
        if std::mem::take(&mut self.replan) {
            if let Ok(p) = planner.plan(&pose.position, &self.goal, &HashSet::new()) {
                let wp = planner.to_result(&p).waypoints;
                self.set_path(wp);
            }
        }
        let target = self.target(pose, cfg);
        let (_, bearing) = distance_bearing(&pose.position, &target, pose.heading);
        if bearing.abs() > cfg.turn_angle / 2.0 {
            return turn_toward(bearing);
        }
        if forward_clear(scene, pose, pose.heading, cfg) {
            return Action::Forward;
        }
        match self.best_detour(scene, pose, cfg) {
            Some(k) => {
                self.detour = Some(k);
                self.take_detour_turn().unwrap_or(Action::Forward)
            }
            None => Action::Left,
        }
    }

    /// Next viewpoint on the route, recomputing the route when the agent has
    /// left it. `avoid` nodes are excluded from recomputed routes.
    pub fn next_node(
        &mut self,
        graph: &NavGraph,
        here: &str,
        goal_node: &str,
        avoid: &HashSet<String>,
    ) -> Option<String> {
        let on_route = self.route.iter().position(|n| n == here);
        match on_route {
            Some(i) if i + 1 < self.route.len() && !avoid.contains(&self.route[i + 1]) => {
                Some(self.route[i + 1].clone())
            }
            _ => {
                let mut pruned = graph.clone();
                if !avoid.is_empty() {
                    pruned
                        .edges
                        .retain(|e| !avoid.contains(&e.a) && !avoid.contains(&e.b));
                }
                self.route = graph_shortest_path(&pruned, here, goal_node)?;
                self.route.get(1).cloned()
            }
        }
    }

    /// Discrete-setting locomotion: face the next viewpoint, then hop.
    pub fn steer_discrete(
        &mut self,
        graph: &NavGraph,
        here: Option<&str>,
        pose: &Pose,
        cfg: &SimConfig,
        avoid: &HashSet<String>,
    ) -> Option<Action> {
        debug_assert_eq!(cfg.mode, Mode::Discrete);
        let here = here?;
        let (goal_node, _) = graph.nearest(&self.goal)?;
        if here == goal_node || self.at_goal(pose, cfg) {
            return Some(Action::Stop);
        }
        let next = self.next_node(graph, here, goal_node, avoid)?;
        let p = graph.position(&next)?;
        let (_, bearing) = distance_bearing(&pose.position, &p, pose.heading);
        Some(if bearing.abs() > cfg.turn_angle / 2.0 {
            turn_toward(bearing)
        } else {
            Action::Forward
        })
    }
}
