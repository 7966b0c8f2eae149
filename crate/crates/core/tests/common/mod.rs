#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};
use std::f64::consts::SQRT_2;

use havln::scene::{MotionFrame, NavGraph};
use havln::{BBox, Cell, HumanModel, MotionSequence, OccupancyGrid, Region, Scene, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn empty_scene(id: &str, width: usize, height: usize, cell: f64) -> Scene {
    let grid = OccupancyGrid::new(Vec3::ZERO, cell, width, height).unwrap();
    let hi = grid.max_corner();
    Scene {
        id: id.into(),
        grid,
        regions: vec![Region {
            id: "room".into(),
            label: "hall".into(),
            bbox: BBox::new(Vec3::ZERO, Vec3::new(hi.x, hi.y, 0.0)),
            object_ids: vec![],
        }],
        objects: vec![],
        humans: vec![],
        nav_graph: NavGraph::default(),
    }
}

pub fn still_human(id: &str, at: Vec3) -> HumanModel {
    HumanModel {
        id: id.into(),
        motion: MotionSequence::still(0.3),
        base_position: at,
        region_id: "room".into(),
        group_id: None,
    }
}

/// Human walking back and forth between `a` and `b` at constant speed.
pub fn shuttle_human(id: &str, a: Vec3, b: Vec3, frames: usize) -> HumanModel {
    let half = frames / 2;
    let d = b - a;
    let frames = (0..frames)
        .map(|t| {
            let s = if t <= half {
                t as f64 / half as f64
            } else {
                (frames - t) as f64 / (frames - half) as f64
            };
            MotionFrame {
                translation: d * s,
                heading: 0.0,
            }
        })
        .collect();
    HumanModel {
        id: id.into(),
        motion: MotionSequence {
            frames,
            radius: 0.3,
            description: String::new(),
            region_label: String::new(),
        },
        base_position: a,
        region_id: "room".into(),
        group_id: None,
    }
}

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(Vec3::ZERO, 1.0, w, h).unwrap();
    for c in 0..w {
        for r in 0..h {
            if rng.gen::<f64>() < density {
                g.set_blocked(Cell::new(c, r), true);
            }
        }
    }
    g
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Neighbors under 8-connectivity where a diagonal needs both orthogonal
/// side cells free. The start cell may itself be blocked.
pub fn neighbors8(g: &OccupancyGrid, c: Cell) -> Vec<(Cell, bool)> {
    let mut out = Vec::new();
    let free = |col: i64, row: i64| {
        col >= 0
            && row >= 0
            && (col as usize) < g.width()
            && (row as usize) < g.height()
            && g.is_free(Cell::new(col as usize, row as usize))
    };
    for dc in -1i64..=1 {
        for dr in -1i64..=1 {
            if dc == 0 && dr == 0 {
                continue;
            }
            let (nc, nr) = (c.col as i64 + dc, c.row as i64 + dr);
            if !free(nc, nr) {
                continue;
            }
            let diag = dc != 0 && dr != 0;
            if diag && !(free(c.col as i64 + dc, c.row as i64) && free(c.col as i64, c.row as i64 + dr)) {
                continue;
            }
            out.push((Cell::new(nc as usize, nr as usize), diag));
        }
    }
    out
}

/// Uniform-cost search; returns the optimal cost in cells as
/// `orthogonal + diagonal·√2`, with the counts tracked exactly.
pub fn ucs(g: &OccupancyGrid, start: Cell, goal: Cell) -> Option<f64> {
    if g.is_blocked(goal) {
        return None;
    }
    let n = g.len();
    let mut best = vec![f64::INFINITY; n];
    let mut counts = vec![(0u64, 0u64); n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[g.index(start)] = 0.0;
    heap.push(Entry(0.0, g.index(start)));
    while let Some(Entry(_, i)) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let c = g.cell_at(i);
        if c == goal {
            let (o, dg) = counts[i];
            return Some(o as f64 + dg as f64 * SQRT_2);
        }
        for (nb, diag) in neighbors8(g, c) {
            let j = g.index(nb);
            let (o, dg) = counts[i];
            let next = if diag { (o, dg + 1) } else { (o + 1, dg) };
            let cost = next.0 as f64 + next.1 as f64 * SQRT_2;
            if cost < best[j] {
                best[j] = cost;
                counts[j] = next;
                heap.push(Entry(cost, j));
            }
        }
    }
    None
}

/// Whether `cells` is a connected, corner-safe walk over free cells.
pub fn valid_walk(g: &OccupancyGrid, cells: &[Cell]) -> bool {
    cells.windows(2).all(|w| neighbors8(g, w[0]).iter().any(|(c, _)| *c == w[1]))
}

/// Breadth-first search over (cell, time mod period) where each tick the
/// walker moves to a neighbor or stays, and may never occupy a cell that
/// `blocked(t, cell)` reports. Returns the first tick at which the goal is
/// reached within `budget` ticks.
pub fn time_expanded_bfs(
    g: &OccupancyGrid,
    start: Cell,
    goal: Cell,
    period: usize,
    budget: usize,
    blocked: impl Fn(usize, Cell) -> bool,
) -> Option<usize> {
    let mut seen = HashSet::new();
    let mut q = VecDeque::new();
    q.push_back((start, 0usize));
    seen.insert((start, 0usize));
    while let Some((c, t)) = q.pop_front() {
        if c == goal {
            return Some(t);
        }
        if t >= budget {
            continue;
        }
        let nt = t + 1;
        let mut moves: Vec<Cell> = neighbors8(g, c).into_iter().map(|(n, _)| n).collect();
        moves.push(c);
        for n in moves {
            if blocked(nt % period, n) {
                continue;
            }
            if seen.insert((n, nt % period)) {
                q.push_back((n, nt));
            }
        }
    }
    None
}

/// Direct reading of the metric formulas over raw per-episode arrays.
pub struct DirectMetrics {
    pub beta: f64,
    pub tcr: f64,
    pub cr: f64,
    pub ne: f64,
    pub sr_collision: f64,
    pub sr_full: f64,
}

pub fn direct_metrics(c: &[usize], a_c: &[usize], d: &[f64], influenced: &[bool], stopped: &[bool]) -> DirectMetrics {
    let l = c.len() as f64;
    let mut n = Vec::new();
    for i in 0..c.len() {
        let diff = c[i] as i64 - a_c[i] as i64;
        n.push(if diff > 0 { diff as f64 } else { 0.0 });
    }
    let beta = influenced.iter().filter(|b| **b).count() as f64 / l;
    let mut tcr = 0.0;
    let mut hits = 0.0;
    let mut ne = 0.0;
    let mut clean = 0.0;
    let mut full = 0.0;
    for i in 0..c.len() {
        tcr += n[i];
        hits += if n[i] >= 1.0 { 1.0 } else { 0.0 };
        ne += d[i];
        if n[i] == 0.0 {
            clean += 1.0;
            if d[i] <= 3.0 && stopped[i] {
                full += 1.0;
            }
        }
    }
    DirectMetrics {
        beta,
        tcr: tcr / l,
        cr: if beta > 0.0 { hits / (beta * l) } else { 0.0 },
        ne: ne / l,
        sr_collision: clean / l,
        sr_full: full / l,
    }
}
