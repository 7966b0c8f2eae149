//! Seeded synthetic scenes and episodes.
//!
//! Scenes are rectangular rooms carved out of a solid grid and joined into a
//! tree by L-shaped corridors between room centers. Viewpoints sit at room
//! centers and about every 2 m along corridor centerlines. Each human is
//! placed next to an object by the swarm search, given an out-and-back
//! pacing loop, and nudged clear of obstacles.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{pso_place, refine_placement, PlacementProblem, PsoParams};
use crate::geometry::{normalize_heading, BBox, Cell, OccupancyGrid, Pose, Vec3};
use crate::planner::{EpisodeSpec, HumanInfluence, Planner, PlannerConfig};
use crate::scene::{
    validate_scene, HumanModel, MotionFrame, MotionSequence, NavGraph, Region, Scene, SceneObject,
    Severity, DEFAULT_FRAME_COUNT, DEFAULT_HUMAN_RADIUS,
};
use crate::seed;
use crate::sim::SimConfig;

/// Displacement bands `(lo, hi, probability)` for generated pacing loops.
pub const DISPLACEMENT_BANDS: [(f64, f64, f64); 5] = [
    (0.05, 0.5, 0.224),
    (0.5, 1.0, 0.373),
    (1.0, 1.5, 0.250),
    (1.5, 2.0, 0.116),
    (2.0, 3.0, 0.037),
];

const ROOM_LABELS: [&str; 8] = [
    "living room",
    "kitchen",
    "office",
    "bedroom",
    "dining room",
    "lounge",
    "library",
    "workshop",
];

const OBJECT_LABELS: [&str; 10] = [
    "chair",
    "table",
    "sofa",
    "bookshelf",
    "plant",
    "cabinet",
    "lamp",
    "desk",
    "tv stand",
    "counter",
];

const MIN_ROOM: f64 = 3.5;
const MAX_ROOM: f64 = 7.0;
const WALL: f64 = 1.0;
const NODE_SPACING: f64 = 2.0;
const MAX_NUDGE: f64 = 1.5;
const MIN_EPISODE_LENGTH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    /// Grid width in cells.
    pub width: usize,
    /// Grid height in cells.
    pub height: usize,
    pub cell_size: f64,
    pub room_count: usize,
    /// Meters.
    pub corridor_width: f64,
    pub object_count: usize,
    pub human_count: usize,
    pub seed: u64,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            width: 160,
            height: 120,
            cell_size: 0.1,
            room_count: 4,
            corridor_width: 1.2,
            object_count: 8,
            human_count: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("infeasible scene: {0}")]
    Infeasible(String),
    #[error("no reachable start/goal pair for episode {episode} after {attempts} attempts")]
    NoReachablePair { episode: usize, attempts: usize },
}

/// Room footprint in cells, half-open on the high side.
#[derive(Debug, Clone, Copy)]
struct Rect {
    c0: usize,
    r0: usize,
    c1: usize,
    r1: usize,
}

impl Rect {
    fn center_cell(&self) -> Cell {
        Cell::new((self.c0 + self.c1) / 2, (self.r0 + self.r1) / 2)
    }
}

fn sample_band(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (lo, hi, p) in DISPLACEMENT_BANDS {
        acc += p;
        if u < acc {
            return rng.gen_range(lo..hi);
        }
    }
    let (lo, hi, _) = DISPLACEMENT_BANDS[DISPLACEMENT_BANDS.len() - 1];
    rng.gen_range(lo..hi)
}

/// Out-and-back loop of `frames` frames reaching `distance` meters from the
/// start along `direction`, with smooth turnarounds.
pub fn pacing_motion(distance: f64, direction: f64, frames: usize, radius: f64) -> MotionSequence {
    let dir = Vec3::from_heading(direction);
    MotionSequence {
        frames: (0..frames)
            .map(|t| {
                let s = (1.0 - (TAU * t as f64 / frames as f64).cos()) / 2.0;
                let back = 2 * t >= frames;
                MotionFrame {
                    translation: dir * (distance * s),
                    heading: normalize_heading(if back { direction + PI } else { direction }),
                }
            })
            .collect(),
        radius,
        description: String::new(),
        region_label: String::new(),
    }
}

fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = *b - *a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.planar_distance(a);
    }
    let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0);
    p.planar_distance(&(*a + ab * t))
}

/// Whether every viewpoint cell is free and mutually reachable on `grid`.
fn viewpoints_connected(grid: &OccupancyGrid, graph: &NavGraph) -> bool {
    let cells: Vec<usize> = graph
        .nodes
        .values()
        .filter_map(|p| grid.try_cell(p).map(|c| grid.index(c)))
        .collect();
    if cells.len() != graph.nodes.len() || cells.iter().any(|&i| grid.is_blocked(grid.cell_at(i))) {
        return false;
    }
    let Some(&first) = cells.first() else {
        return true;
    };
    let mut seen = vec![false; grid.len()];
    seen[first] = true;
    let mut queue = VecDeque::from([first]);
    let blocked = |i: usize| grid.is_blocked(grid.cell_at(i));
    while let Some(i) = queue.pop_front() {
        for mv in crate::planner::MOVES {
            if let Some(j) = crate::planner::step(grid, i, mv, &blocked) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    cells.iter().all(|&i| seen[i])
}

fn check_params(p: &SceneParams) -> Result<(), SynthError> {
    let bad = |m: &str| Err(SynthError::InvalidParams(m.to_string()));
    if p.width < 20 || p.height < 20 {
        return bad("grid must be at least 20x20 cells");
    }
    if !(p.cell_size > 0.0) {
        return bad("cell_size must be positive");
    }
    if p.room_count == 0 {
        return bad("need at least one room");
    }
    if !(p.corridor_width >= 0.8) {
        return bad("corridor_width must be at least 0.8 m");
    }
    if p.human_count > 0 && p.object_count == 0 {
        return bad("humans are placed next to objects, so object_count must be positive");
    }
    Ok(())
}

/// Splits the map into a grid of slots, picks `room_count` of them, and
/// draws one room inside each so neighbors stay at least a wall apart.
fn carve_rooms(p: &SceneParams, rng: &mut ChaCha8Rng) -> Result<Vec<Rect>, SynthError> {
    let cells = |m: f64| (m / p.cell_size).round() as usize;
    let n = p.room_count;
    let kx = ((n as f64 * p.width as f64 / p.height as f64).sqrt().ceil() as usize).clamp(1, n);
    let ky = n.div_ceil(kx);
    let (sw, sh) = ((p.width - 2) / kx, (p.height - 2) / ky);
    let pad = cells(WALL / 2.0).max(1);
    let min = cells(MIN_ROOM);
    let (max_w, max_h) = (
        sw.saturating_sub(2 * pad).min(cells(MAX_ROOM)),
        sh.saturating_sub(2 * pad).min(cells(MAX_ROOM)),
    );
    if max_w < min || max_h < min {
        return Err(SynthError::Infeasible(format!(
            "a {}x{} grid cannot hold {n} rooms of at least {MIN_ROOM} m",
            p.width, p.height
        )));
    }
    let mut slots: Vec<usize> = (0..kx * ky).collect();
    for i in (1..slots.len()).rev() {
        slots.swap(i, rng.gen_range(0..=i));
    }
    slots.truncate(n);
    slots.sort_unstable();
    Ok(slots
        .into_iter()
        .map(|s| {
            let (x0, y0) = (1 + (s % kx) * sw + pad, 1 + (s / kx) * sh + pad);
            let w = rng.gen_range(min..=max_w);
            let h = rng.gen_range(min..=max_h);
            let c0 = x0 + rng.gen_range(0..=max_w - w);
            let r0 = y0 + rng.gen_range(0..=max_h - h);
            Rect {
                c0,
                r0,
                c1: c0 + w,
                r1: r0 + h,
            }
        })
        .collect())
}

/// Carves an axis-aligned strip of half-width `half` cells around the
/// segment between two cells sharing a row or column.
fn carve_strip(grid: &mut OccupancyGrid, a: Cell, b: Cell, half: usize) {
    let (c0, c1) = (a.col.min(b.col).saturating_sub(half), a.col.max(b.col) + half);
    let (r0, r1) = (a.row.min(b.row).saturating_sub(half), a.row.max(b.row) + half);
    for row in r0..=r1.min(grid.height() - 2) {
        for col in c0..=c1.min(grid.width() - 2) {
            grid.set_blocked(Cell::new(col.max(1), row.max(1)), false);
        }
    }
}

fn add_leg(graph: &mut NavGraph, from: &str, a: Vec3, b: Vec3, next_id: &mut usize) -> String {
    let len = a.planar_distance(&b);
    if len < 1e-9 {
        return from.to_string();
    }
    let m = ((len / NODE_SPACING).round() as usize).max(1);
    let mut prev = from.to_string();
    for k in 1..=m {
        let p = a + (b - a) * (k as f64 / m as f64);
        let id = match graph.nodes.iter().find(|(_, q)| q.planar_distance(&p) < 1e-9) {
            Some((id, _)) => id.clone(),
            None => {
                let id = format!("v{next_id:03}");
                *next_id += 1;
                graph.nodes.insert(id.clone(), p);
                id
            }
        };
        graph.connect(&prev, &id);
        prev = id;
    }
    prev
}

/// Generates a scene. The same parameters always give the same document.
pub fn gen_scene(params: &SceneParams) -> Result<Scene, SynthError> {
    check_params(params)?;
    let mut rng = seed::child_rng(params.seed, "scene", 0);
    let mut grid = OccupancyGrid::new(Vec3::ZERO, params.cell_size, params.width, params.height)
        .map_err(|e| SynthError::InvalidParams(e.to_string()))?;
    for c in grid.cells().collect::<Vec<_>>() {
        grid.set_blocked(c, true);
    }
    let rooms = carve_rooms(params, &mut rng)?;
    for r in &rooms {
        for row in r.r0..r.r1 {
            for col in r.c0..r.c1 {
                grid.set_blocked(Cell::new(col, row), false);
            }
        }
    }

    let mut graph = NavGraph::default();
    let centers: Vec<Vec3> = rooms.iter().map(|r| grid.cell_center(r.center_cell())).collect();
    for (i, c) in centers.iter().enumerate() {
        graph.nodes.insert(format!("room{i}"), *c);
    }
    let half = ((params.corridor_width / params.cell_size / 2.0).floor() as usize).max(1);
    let mut next_id = 0;
    let mut corridors: Vec<(Vec3, Vec3)> = Vec::new();
    for i in 1..rooms.len() {
        let j = (0..i)
            .min_by(|&a, &b| {
                centers[i]
                    .planar_distance(&centers[a])
                    .total_cmp(&centers[i].planar_distance(&centers[b]))
                    .then_with(|| a.cmp(&b))
            })
            .expect("at least one earlier room");
        let (a, b) = (rooms[i].center_cell(), rooms[j].center_cell());
        let corner = Cell::new(b.col, a.row);
        carve_strip(&mut grid, a, corner, half);
        carve_strip(&mut grid, corner, b, half);
        let (pa, pc, pb) = (centers[i], grid.cell_center(corner), centers[j]);
        let mid = add_leg(&mut graph, &format!("room{i}"), pa, pc, &mut next_id);
        let end = add_leg(&mut graph, &mid, pc, pb, &mut next_id);
        graph.connect(&end, &format!("room{j}"));
        corridors.push((pa, pc));
        corridors.push((pc, pb));
    }

    let regions: Vec<Region> = rooms
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lo = grid.origin() + Vec3::new(r.c0 as f64, r.r0 as f64, 0.0) * params.cell_size;
            let hi = grid.origin() + Vec3::new(r.c1 as f64, r.r1 as f64, 0.0) * params.cell_size;
            Region {
                id: format!("room{i}"),
                label: ROOM_LABELS[i % ROOM_LABELS.len()].to_string(),
                bbox: BBox::new(lo, hi),
                object_ids: Vec::new(),
            }
        })
        .collect();

    let mut scene = Scene {
        id: format!("synth-{:016x}", params.seed),
        grid,
        regions,
        objects: Vec::new(),
        humans: Vec::new(),
        nav_graph: graph,
    };
    place_objects(&mut scene, params, &corridors, &mut rng)?;
    place_humans(&mut scene, params)?;

    let errors: Vec<String> = validate_scene(&scene)
        .into_iter()
        .filter(|v| v.severity == Severity::Error)
        .map(|v| format!("{}: {}", v.location, v.message))
        .collect();
    if !errors.is_empty() {
        return Err(SynthError::Infeasible(errors.join("; ")));
    }
    Ok(scene)
}

fn place_objects(
    scene: &mut Scene,
    params: &SceneParams,
    corridors: &[(Vec3, Vec3)],
    rng: &mut ChaCha8Rng,
) -> Result<(), SynthError> {
    let clearance = SimConfig::default().agent_radius + PlannerConfig::default().clearance_margin;
    let mut attempts = 0;
    while scene.objects.len() < params.object_count {
        attempts += 1;
        if attempts > 200 * params.object_count.max(1) {
            return Err(SynthError::Infeasible(format!(
                "placed only {} of {} objects",
                scene.objects.len(),
                params.object_count
            )));
        }
        let ri = rng.gen_range(0..scene.regions.len());
        let b = scene.regions[ri].bbox;
        let radius: f64 = rng.gen_range(0.2..0.4);
        let inset = radius + 0.05;
        let side = rng.gen_range(0..4);
        let along = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| {
            let (a, z) = (lo + inset + 0.2, hi - inset - 0.2);
            if a < z {
                rng.gen_range(a..z)
            } else {
                (lo + hi) / 2.0
            }
        };
        let position = match side {
            0 => Vec3::new(along(b.lo.x, b.hi.x, rng), b.lo.y + inset, 0.0),
            1 => Vec3::new(along(b.lo.x, b.hi.x, rng), b.hi.y - inset, 0.0),
            2 => Vec3::new(b.lo.x + inset, along(b.lo.y, b.hi.y, rng), 0.0),
            _ => Vec3::new(b.hi.x - inset, along(b.lo.y, b.hi.y, rng), 0.0),
        };
        let near_objects = scene
            .objects
            .iter()
            .any(|o| o.position.planar_distance(&position) < o.radius + radius + 0.3);
        let near_routes = corridors
            .iter()
            .any(|(a, z)| point_segment_distance(&position, a, z) < radius + 0.8);
        if near_objects || near_routes {
            continue;
        }
        let id = format!("obj{}", scene.objects.len());
        scene.objects.push(SceneObject {
            id: id.clone(),
            label: OBJECT_LABELS[rng.gen_range(0..OBJECT_LABELS.len())].to_string(),
            position,
            radius,
        });
        let grid = crate::planner::planning_grid(scene, clearance);
        if viewpoints_connected(&grid, &scene.nav_graph) {
            scene.regions[ri].object_ids.push(id);
        } else {
            scene.objects.pop();
        }
    }
    Ok(())
}

fn place_humans(scene: &mut Scene, params: &SceneParams) -> Result<(), SynthError> {
    for k in 0..params.human_count {
        let mut rng = seed::child_rng(params.seed, "human", k as u64);
        let target = scene.objects[rng.gen_range(0..scene.objects.len())].clone();
        let region = scene
            .regions
            .iter()
            .find(|r| r.object_ids.contains(&target.id))
            .cloned()
            .expect("every object belongs to a room");
        let others: Vec<SceneObject> = scene
            .objects
            .iter()
            .filter(|o| o.id != target.id && region.object_ids.contains(&o.id))
            .cloned()
            .collect();
        let problem = PlacementProblem::new(region.clone(), target.clone(), others);
        let params = PsoParams {
            seed: seed::child(params.seed, "pso", k as u64),
            ..PsoParams::default()
        };
        // the swarm's own failure is not fatal: refinement below has the
        // final say on a clean pose
        let coarse = pso_place(&problem, &params).unwrap_or(target.position);
        let distance = sample_band(&mut rng);
        let heading0 = rng.gen_range(0.0..TAU);
        let mut placed = None;
        for j in 0..12 {
            let dir = heading0 + j as f64 * TAU / 12.0;
            let mut motion = pacing_motion(distance, dir, DEFAULT_FRAME_COUNT, DEFAULT_HUMAN_RADIUS);
            motion.description = format!("pacing back and forth beside the {}", target.label);
            motion.region_label = region.label.clone();
            let mut human = HumanModel {
                id: format!("human{k}"),
                motion,
                base_position: Vec3::new(coarse.x, coarse.y, 0.0),
                region_id: region.id.clone(),
                group_id: None,
            };
            if let Ok(p) = refine_placement(scene, &human, MAX_NUDGE) {
                human.base_position = p;
                placed = Some(human);
                break;
            }
        }
        match placed {
            Some(h) => scene.humans.push(h),
            None => {
                return Err(SynthError::Infeasible(format!(
                    "no clean pose for human{k} near {}",
                    target.id
                )))
            }
        }
    }
    Ok(())
}

fn region_phrase(scene: &Scene, p: &Vec3) -> String {
    scene
        .region_at(p)
        .map_or_else(|| "corridor".to_string(), |r| r.label.clone())
}

fn instruction(scene: &Scene, ep: &EpisodeSpec) -> String {
    let from = region_phrase(scene, &ep.start.position);
    let to = region_phrase(scene, &ep.goal);
    let mut text = if from == to {
        format!("Cross the {from} to the far side and stop there.")
    } else {
        format!("Leave the {from} and walk to the {to}, then stop.")
    };
    let nearest = |waypoints: &[Vec3]| {
        scene.humans.iter().min_by(|a, b| {
            let d = |h: &HumanModel| {
                waypoints
                    .iter()
                    .map(|w| w.planar_distance(&h.base_position))
                    .fold(f64::INFINITY, f64::min)
            };
            d(a).total_cmp(&d(b)).then_with(|| a.id.cmp(&b.id))
        })
    };
    let waypoints = ep.gt_path.as_ref().map_or(&[][..], |g| &g.waypoints[..]);
    match (ep.human_influence, nearest(waypoints)) {
        (HumanInfluence::Direct, Some(h)) => text.push_str(&format!(
            " Along the way someone is {}; give them room.",
            h.motion.description
        )),
        (HumanInfluence::Indirect, Some(h)) => text.push_str(&format!(
            " You may notice a person {} off to the side.",
            h.motion.description
        )),
        _ => {}
    }
    text
}

/// Samples annotated episodes whose start and goal are free, at least 5 m
/// apart along the static shortest path, and whose start is clear of every
/// human's path.
pub fn gen_episodes(
    scene: &Scene,
    count: usize,
    seed: u64,
    sim: &SimConfig,
    cfg: &PlannerConfig,
) -> Result<Vec<EpisodeSpec>, SynthError> {
    const ATTEMPTS: usize = 500;
    let planner = Planner::new(scene, sim, cfg);
    let grid = planner.grid();
    let free: Vec<Cell> = grid.cells().filter(|c| grid.is_free(*c)).collect();
    let none = Default::default();
    let turns = (TAU / sim.turn_angle).round().max(1.0) as u64;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = seed::child_rng(seed, "episode", i as u64);
        let mut found = None;
        for _ in 0..ATTEMPTS {
            if free.is_empty() {
                break;
            }
            let start = grid.cell_center(free[rng.gen_range(0..free.len())]);
            let goal = grid.cell_center(free[rng.gen_range(0..free.len())]);
            let heading = rng.gen_range(0..turns) as f64 * sim.turn_angle;
            let crowded = scene.humans.iter().any(|h| {
                let reach = h.radius() + sim.agent_radius + 0.3;
                h.playback_positions().any(|p| p.planar_distance(&start) < reach)
            });
            if crowded {
                continue;
            }
            let Ok(path) = planner.plan(&start, &goal, &none) else {
                continue;
            };
            if planner.to_result(&path).length < MIN_EPISODE_LENGTH {
                continue;
            }
            found = Some((start, goal, heading));
            break;
        }
        let Some((start, goal, heading)) = found else {
            return Err(SynthError::NoReachablePair {
                episode: i,
                attempts: ATTEMPTS,
            });
        };
        let mut ep = EpisodeSpec::new(
            format!("{}-ep{i:03}", scene.id),
            scene.id.clone(),
            Pose::at(start, heading),
            goal,
        );
        ep = planner.annotate(&ep);
        ep.instruction = instruction(scene, &ep);
        ep.metadata = BTreeMap::from([("instruction".to_string(), "synthetic-template".to_string())]);
        out.push(ep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pacing_reaches_distance_and_returns() {
        let m = pacing_motion(1.7, 0.3, 120, 0.3);
        assert_eq!(m.frames[0].translation, Vec3::ZERO);
        assert!((m.displacement() - 1.7).abs() < 1e-12);
        let step = m
            .frames
            .windows(2)
            .map(|w| w[0].translation.distance(&w[1].translation))
            .fold(0.0, f64::max);
        assert!(step < 0.5);
    }

    #[test]
    fn band_probabilities_sum_to_one() {
        let total: f64 = DISPLACEMENT_BANDS.iter().map(|b| b.2).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_grids() {
        let p = SceneParams {
            width: 10,
            ..SceneParams::default()
        };
        assert!(matches!(gen_scene(&p), Err(SynthError::InvalidParams(_))));
    }
}
