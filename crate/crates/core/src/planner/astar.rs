use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::SQRT_2;

use crate::geometry::{Cell, OccupancyGrid};

use super::PlanError;

/// A cell path with its move counts; the length in cell units is
/// `orthogonal + diagonal·√2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub orthogonal: usize,
    pub diagonal: usize,
}

impl GridPath {
    pub fn cost(&self) -> f64 {
        move_cost(self.orthogonal, self.diagonal)
    }
}

pub(crate) fn move_cost(orthogonal: usize, diagonal: usize) -> f64 {
    orthogonal as f64 + diagonal as f64 * SQRT_2
}

pub(crate) const MOVES: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Index of the neighbor of `idx` in direction `(dc, dr)`, if a move there is
/// allowed. Diagonal moves need both adjacent orthogonal cells open, so
/// paths never cut a blocked corner.
pub(crate) fn step(
    grid: &OccupancyGrid,
    idx: usize,
    (dc, dr): (i64, i64),
    blocked: &impl Fn(usize) -> bool,
) -> Option<usize> {
    let w = grid.width() as i64;
    let h = grid.height() as i64;
    let (c, r) = ((idx as i64) % w, (idx as i64) / w);
    let (nc, nr) = (c + dc, r + dr);
    if nc < 0 || nr < 0 || nc >= w || nr >= h {
        return None;
    }
    let n = (nr * w + nc) as usize;
    if blocked(n) {
        return None;
    }
    if dc != 0 && dr != 0 {
        let side_a = (r * w + nc) as usize;
        let side_b = (nr * w + c) as usize;
        if blocked(side_a) || blocked(side_b) {
            return None;
        }
    }
    Some(n)
}

fn octile(grid: &OccupancyGrid, a: usize, b: usize) -> f64 {
    let w = grid.width();
    let dx = (a % w).abs_diff(b % w);
    let dy = (a / w).abs_diff(b / w);
    move_cost(dx.max(dy) - dx.min(dy), dx.min(dy))
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    h: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // reversed so the max-heap pops the smallest (f, h, idx)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* over cell indices with an arbitrary blocking predicate. The start cell
/// is never treated as blocked.
pub(crate) fn astar_by(
    grid: &OccupancyGrid,
    start: usize,
    goal: usize,
    blocked: impl Fn(usize) -> bool,
) -> Option<GridPath> {
    let blocked = |i: usize| i != start && blocked(i);
    if blocked(goal) {
        return None;
    }
    let n = grid.len();
    let mut counts: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    counts[start] = (0, 0);
    let h0 = octile(grid, start, goal);
    heap.push(Open {
        f: h0,
        h: h0,
        idx: start,
    });
    while let Some(Open { idx, .. }) = heap.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == goal {
            let mut cells = vec![grid.cell_at(idx)];
            let mut cur = idx;
            while cur != start {
                cur = parent[cur];
                cells.push(grid.cell_at(cur));
            }
            cells.reverse();
            let (orthogonal, diagonal) = counts[goal];
            return Some(GridPath {
                cells,
                orthogonal,
                diagonal,
            });
        }
        let (o, d) = counts[idx];
        for mv in MOVES {
            let Some(next) = step(grid, idx, mv, &blocked) else {
                continue;
            };
            if closed[next] {
                continue;
            }
            let cand = if mv.0 != 0 && mv.1 != 0 { (o, d + 1) } else { (o + 1, d) };
            let g = move_cost(cand.0, cand.1);
            let old = counts[next];
            if old.0 == usize::MAX || g < move_cost(old.0, old.1) {
                counts[next] = cand;
                parent[next] = idx;
                let h = octile(grid, next, goal);
                heap.push(Open { f: g + h, h, idx: next });
            }
        }
    }
    None
}

/// Shortest 8-connected path from `start` to `goal`, treating `extra_blocked`
/// cells as blocked in addition to the grid's own.
pub fn astar(
    grid: &OccupancyGrid,
    start: Cell,
    goal: Cell,
    extra_blocked: &HashSet<Cell>,
) -> Result<GridPath, PlanError> {
    for c in [start, goal] {
        if !grid.in_bounds(c) {
            return Err(PlanError::OutOfGrid(c));
        }
    }
    let extra: HashSet<usize> = extra_blocked
        .iter()
        .filter(|c| grid.in_bounds(**c))
        .map(|c| grid.index(*c))
        .collect();
    astar_by(grid, grid.index(start), grid.index(goal), |i| {
        grid.is_blocked(grid.cell_at(i)) || extra.contains(&i)
    })
    .ok_or(PlanError::Unreachable)
}
