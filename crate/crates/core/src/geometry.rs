//! Planar-dominant geometry shared by every other module.
//!
//! Angles follow `atan2(dy, dx)` in the world frame. The occupancy grid is
//! row-major with rows growing along +y, so when a map is drawn with row 0 at
//! the top a positive rotation is clockwise: "turn right" increases heading.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) lies outside the grid extent")]
    OutOfBounds { x: f64, y: f64 },
    #[error("cell ({col}, {row}) lies outside a {width}x{height} grid")]
    CellOutOfBounds {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn planar_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        (*other - *self).norm()
    }

    /// Distance in the x/y plane, ignoring height.
    pub fn planar_distance(&self, other: &Vec3) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Unit vector in the plane pointing along `heading`.
    pub fn from_heading(heading: f64) -> Vec3 {
        Vec3::new(heading.cos(), heading.sin(), 0.0)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Normalizes a heading into `[0, 2π)`.
pub fn normalize_heading(h: f64) -> f64 {
    let r = h.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub heading: f64,
    #[serde(default)]
    pub pitch: f64,
}

impl Pose {
    pub fn new(position: Vec3, heading: f64, pitch: f64) -> Self {
        Pose {
            position,
            heading: normalize_heading(heading),
            pitch: pitch.clamp(-PI / 2.0, PI / 2.0),
        }
    }

    pub fn at(position: Vec3, heading: f64) -> Self {
        Pose::new(position, heading, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BBox {
    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        BBox { lo, hi }
    }

    pub fn is_well_formed(&self) -> bool {
        self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo.x <= self.hi.x
            && self.lo.y <= self.hi.y
            && self.lo.z <= self.hi.z
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.distance_outside(p) == 0.0
    }

    pub fn contains_planar(&self, p: &Vec3) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    /// Euclidean distance from `p` to the box; zero inside.
    pub fn distance_outside(&self, p: &Vec3) -> f64 {
        let dx = (self.lo.x - p.x).max(0.0).max(p.x - self.hi.x);
        let dy = (self.lo.y - p.y).max(0.0).max(p.y - self.hi.y);
        let dz = (self.lo.z - p.z).max(0.0).max(p.z - self.hi.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn center(&self) -> Vec3 {
        (self.lo + self.hi) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.hi - self.lo
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.lo.x, self.hi.x),
            p.y.clamp(self.lo.y, self.hi.y),
            p.z.clamp(self.lo.z, self.hi.z),
        )
    }
}

/// Euclidean distance from `a` to `b` and the bearing of `b` relative to an
/// observer at `a` facing `observer_heading`, wrapped to `(-π, π]`.
pub fn distance_bearing(a: &Vec3, b: &Vec3, observer_heading: f64) -> (f64, f64) {
    let d = *b - *a;
    let distance = d.norm();
    if d.x == 0.0 && d.y == 0.0 {
        return (distance, 0.0);
    }
    let world = d.y.atan2(d.x);
    (distance, wrap_angle(world - observer_heading))
}

pub fn in_fov(observer: &Pose, target: &Vec3, fov: f64, max_range: f64) -> bool {
    let (distance, bearing) = distance_bearing(&observer.position, target, observer.heading);
    if distance > max_range {
        return false;
    }
    fov >= TAU || bearing.abs() <= fov / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct OccupancyGrid {
    origin: Vec3,
    cell_size: f64,
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

/// Wire form of the grid: `blocked` holds run lengths over the row-major
/// cells, alternating free/blocked and always starting with a free run
/// (which may be zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridDoc {
    origin: Vec3,
    cell_size: f64,
    width: usize,
    height: usize,
    blocked: Vec<usize>,
}

impl TryFrom<GridDoc> for OccupancyGrid {
    type Error = GeometryError;

    fn try_from(doc: GridDoc) -> Result<Self, Self::Error> {
        let total = doc
            .width
            .checked_mul(doc.height)
            .ok_or_else(|| GeometryError::InvalidGrid("width*height overflows".into()))?;
        let run_sum: usize = doc.blocked.iter().sum();
        if run_sum != total {
            return Err(GeometryError::InvalidGrid(format!(
                "run lengths sum to {run_sum}, expected {total}"
            )));
        }
        let mut cells = Vec::with_capacity(total);
        for (i, &run) in doc.blocked.iter().enumerate() {
            cells.extend(std::iter::repeat_n(i % 2 == 1, run));
        }
        OccupancyGrid::from_cells(doc.origin, doc.cell_size, doc.width, doc.height, cells)
    }
}

impl From<OccupancyGrid> for GridDoc {
    fn from(g: OccupancyGrid) -> Self {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for &b in &g.blocked {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        GridDoc {
            origin: g.origin,
            cell_size: g.cell_size,
            width: g.width,
            height: g.height,
            blocked: runs,
        }
    }
}

impl OccupancyGrid {
    pub fn new(
        origin: Vec3,
        cell_size: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        Self::from_cells(origin, cell_size, width, height, vec![false; width * height])
    }

    pub fn from_cells(
        origin: Vec3,
        cell_size: f64,
        width: usize,
        height: usize,
        blocked: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!(
                "cell_size must be positive, got {cell_size}"
            )));
        }
        if !origin.is_finite() {
            return Err(GeometryError::InvalidGrid("origin must be finite".into()));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidGrid("grid must have at least one cell".into()));
        }
        if blocked.len() != width * height {
            return Err(GeometryError::InvalidGrid(format!(
                "{} cells for a {width}x{height} grid",
                blocked.len()
            )));
        }
        Ok(OccupancyGrid {
            origin,
            cell_size,
            width,
            height,
            blocked,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.blocked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty()
    }

    /// World-space upper corner of the grid (exclusive).
    pub fn max_corner(&self) -> Vec3 {
        Vec3::new(
            self.origin.x + self.width as f64 * self.cell_size,
            self.origin.y + self.height as f64 * self.cell_size,
            self.origin.z,
        )
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[self.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_blocked(c)
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        let i = self.index(c);
        self.blocked[i] = blocked;
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.blocked.len()).map(move |i| self.cell_at(i))
    }

    pub fn free_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn contains_point(&self, p: &Vec3) -> bool {
        self.try_cell(p).is_some()
    }

    pub fn try_cell(&self, p: &Vec3) -> Option<Cell> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64) {
            return None;
        }
        Some(Cell::new(fx as usize, fy as usize))
    }

    pub fn world_to_cell(&self, p: &Vec3) -> Result<Cell, GeometryError> {
        self.try_cell(p)
            .ok_or(GeometryError::OutOfBounds { x: p.x, y: p.y })
    }

    /// Center of `c` at the grid's floor height.
    pub fn cell_to_world(&self, c: Cell) -> Result<Vec3, GeometryError> {
        if !self.in_bounds(c) {
            return Err(GeometryError::CellOutOfBounds {
                col: c.col,
                row: c.row,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.cell_center(c))
    }

    pub(crate) fn cell_center(&self, c: Cell) -> Vec3 {
        Vec3::new(
            self.origin.x + (c.col as f64 + 0.5) * self.cell_size,
            self.origin.y + (c.row as f64 + 0.5) * self.cell_size,
            self.origin.z,
        )
    }

    /// Planar distance from `p` to the closed square of cell `c`.
    pub fn distance_to_cell(&self, p: &Vec3, c: Cell) -> f64 {
        let x0 = self.origin.x + c.col as f64 * self.cell_size;
        let y0 = self.origin.y + c.row as f64 * self.cell_size;
        let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + self.cell_size));
        let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + self.cell_size));
        dx.hypot(dy)
    }

    /// Closest blocked geometry strictly inside the disc. Space outside the
    /// grid counts as blocked. Returns the offending cell (`None` for the
    /// outer boundary) and its distance from `center`.
    pub fn disc_overlap(&self, center: &Vec3, radius: f64) -> Option<(Option<Cell>, f64)> {
        let mut best: Option<(Option<Cell>, f64)> = None;
        let max = self.max_corner();
        let boundary = (center.x - self.origin.x)
            .min(center.y - self.origin.y)
            .min(max.x - center.x)
            .min(max.y - center.y);
        if boundary < radius {
            best = Some((None, boundary.max(0.0)));
        }
        let cs = self.cell_size;
        let c0 = (((center.x - radius - self.origin.x) / cs).floor().max(0.0)) as usize;
        let r0 = (((center.y - radius - self.origin.y) / cs).floor().max(0.0)) as usize;
        let c1 = ((center.x + radius - self.origin.x) / cs).floor();
        let r1 = ((center.y + radius - self.origin.y) / cs).floor();
        if c1 < 0.0 || r1 < 0.0 {
            return best;
        }
        let c1 = (c1 as usize).min(self.width - 1);
        let r1 = (r1 as usize).min(self.height - 1);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let cell = Cell::new(col, row);
                if !self.is_blocked(cell) {
                    continue;
                }
                let d = self.distance_to_cell(center, cell);
                if d < radius && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((Some(cell), d));
                }
            }
        }
        best
    }

    /// Conservative supercover traversal of the segment `a -> b`; true iff
    /// every touched cell is free. Endpoints are put in a canonical order
    /// first so the result is symmetric in its arguments.
    pub fn line_of_sight(&self, a: &Vec3, b: &Vec3) -> Result<bool, GeometryError> {
        self.world_to_cell(a)?;
        self.world_to_cell(b)?;
        let (a, b) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
        let mut blocked = false;
        self.traverse(a, b, |cell| {
            if self.is_blocked(cell) {
                blocked = true;
                false
            } else {
                true
            }
        });
        Ok(!blocked)
    }

    /// Visits every cell touched by the segment, stopping early when `visit`
    /// returns false. Both endpoints must be inside the grid.
    fn traverse(&self, a: &Vec3, b: &Vec3, mut visit: impl FnMut(Cell) -> bool) {
        const TIE: f64 = 1e-12;
        let ax = (a.x - self.origin.x) / self.cell_size;
        let ay = (a.y - self.origin.y) / self.cell_size;
        let bx = (b.x - self.origin.x) / self.cell_size;
        let by = (b.y - self.origin.y) / self.cell_size;
        let w = self.width as i64;
        let h = self.height as i64;
        let clamp = |v: f64, n: i64| (v.floor() as i64).clamp(0, n - 1);
        let (mut cx, mut cy) = (clamp(ax, w), clamp(ay, h));
        let (ex, ey) = (clamp(bx, w), clamp(by, h));
        let dx = bx - ax;
        let dy = by - ay;
        let sx: i64 = if dx > 0.0 { 1 } else if dx < 0.0 { -1 } else { 0 };
        let sy: i64 = if dy > 0.0 { 1 } else if dy < 0.0 { -1 } else { 0 };
        let t_delta_x = if sx != 0 { 1.0 / dx.abs() } else { f64::INFINITY };
        let t_delta_y = if sy != 0 { 1.0 / dy.abs() } else { f64::INFINITY };
        let mut t_max_x = match sx {
            1 => ((cx + 1) as f64 - ax) / dx,
            -1 => (ax - cx as f64) / -dx,
            _ => f64::INFINITY,
        };
        let mut t_max_y = match sy {
            1 => ((cy + 1) as f64 - ay) / dy,
            -1 => (ay - cy as f64) / -dy,
            _ => f64::INFINITY,
        };
        let in_grid = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h;
        let cell = |x: i64, y: i64| Cell::new(x as usize, y as usize);
        let budget = (ex - cx).abs() + (ey - cy).abs() + 2;
        let mut moves = 0;
        loop {
            if !visit(cell(cx, cy)) {
                return;
            }
            if (cx, cy) == (ex, ey) || moves > budget {
                break;
            }
            moves += 1;
            if t_max_x < t_max_y - TIE {
                cx += sx;
                t_max_x += t_delta_x;
            } else if t_max_y < t_max_x - TIE {
                cy += sy;
                t_max_y += t_delta_y;
            } else {
                // passing through a corner: touch both side cells
                for (nx, ny) in [(cx + sx, cy), (cx, cy + sy)] {
                    if in_grid(nx, ny) && !visit(cell(nx, ny)) {
                        return;
                    }
                }
                cx += sx;
                cy += sy;
                t_max_x += t_delta_x;
                t_max_y += t_delta_y;
                moves += 1;
            }
            if !in_grid(cx, cy) {
                break;
            }
        }
        if (cx, cy) != (ex, ey) {
            visit(cell(ex, ey));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn empty(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(Vec3::ZERO, 0.1, w, h).unwrap()
    }

    #[test]
    fn distance_bearing_examples() {
        assert_eq!(
            distance_bearing(&Vec3::ZERO, &Vec3::ZERO, 1.0),
            (0.0, 0.0)
        );
        let (d, b) = distance_bearing(&Vec3::ZERO, &Vec3::new(3.0, 4.0, 0.0), 0.0);
        assert_eq!(d, 5.0);
        assert!((b - 0.927_295_218_001_612_2).abs() < 1e-12);
        let (d, b) = distance_bearing(&Vec3::ZERO, &Vec3::new(1.0, 0.0, 0.0), PI);
        assert_eq!(d, 1.0);
        assert_eq!(b, PI);
    }

    #[test]
    fn fov_examples() {
        let obs = Pose::at(Vec3::ZERO, 0.0);
        assert!(in_fov(&obs, &Vec3::new(1.0, 0.0, 0.0), PI / 2.0, 10.0));
        let a = PI / 2.0 + 0.01;
        let t = Vec3::new(a.cos(), a.sin(), 0.0);
        assert!(!in_fov(&obs, &t, PI, 10.0));
        assert!(in_fov(&obs, &Vec3::new(-3.0, -0.1, 0.0), TAU, 10.0));
        assert!(!in_fov(&obs, &Vec3::new(-30.0, 0.0, 0.0), TAU, 10.0));
    }

    #[test]
    fn cell_conversions() {
        let g = empty(10, 10);
        assert_eq!(g.world_to_cell(&Vec3::new(0.05, 0.05, 0.0)).unwrap(), Cell::new(0, 0));
        let c = g.cell_to_world(Cell::new(0, 0)).unwrap();
        assert!((c.x - 0.05).abs() < 1e-15 && (c.y - 0.05).abs() < 1e-15 && c.z == 0.0);
        assert_eq!(g.world_to_cell(&Vec3::new(0.999_999, 0.0, 0.0)).unwrap().col, 9);
        assert!(g.world_to_cell(&Vec3::new(1.0, 0.5, 0.0)).is_err());
        assert!(g.world_to_cell(&Vec3::new(-0.01, 0.5, 0.0)).is_err());
        assert!(g.cell_to_world(Cell::new(10, 0)).is_err());
    }

    #[test]
    fn los_examples() {
        let mut g = empty(10, 10);
        let a = Vec3::new(0.05, 0.55, 0.0);
        let b = Vec3::new(0.95, 0.55, 0.0);
        assert!(g.line_of_sight(&a, &b).unwrap());
        assert!(g.line_of_sight(&a, &a).unwrap());
        g.set_blocked(Cell::new(5, 5), true);
        assert!(!g.line_of_sight(&a, &b).unwrap());
        assert!(!g.line_of_sight(&b, &a).unwrap());
        assert!(g.line_of_sight(&a, &Vec3::new(0.05, 0.95, 0.0)).unwrap());
        assert!(g.line_of_sight(&a, &Vec3::new(2.0, 0.5, 0.0)).is_err());
    }

    #[test]
    fn los_blocks_diagonal_gap() {
        // two blocked cells touching at a corner; a diagonal through that
        // corner must not see through
        let mut g = empty(4, 4);
        g.set_blocked(Cell::new(1, 2), true);
        g.set_blocked(Cell::new(2, 1), true);
        let a = Vec3::new(0.15, 0.15, 0.0);
        let b = Vec3::new(0.35, 0.35, 0.0);
        assert!(!g.line_of_sight(&a, &b).unwrap());
    }

    #[test]
    fn disc_overlap_static() {
        let mut g = empty(10, 10);
        g.set_blocked(Cell::new(5, 5), true);
        // cell (5,5) spans x in [0.5, 0.6]; center 0.1 m to its left
        let p = Vec3::new(0.4, 0.55, 0.0);
        let (cell, d) = g.disc_overlap(&p, 0.2).unwrap();
        assert_eq!(cell, Some(Cell::new(5, 5)));
        assert!((d - 0.1).abs() < 1e-12);
        assert!(g.disc_overlap(&Vec3::new(0.25, 0.55, 0.0), 0.2).is_none());
        // near the outer boundary
        let (cell, _) = g.disc_overlap(&Vec3::new(0.05, 0.3, 0.0), 0.2).unwrap();
        assert_eq!(cell, None);
    }

    #[test]
    fn grid_rle_roundtrip() {
        let mut g = empty(5, 4);
        g.set_blocked(Cell::new(0, 0), true);
        g.set_blocked(Cell::new(4, 3), true);
        g.set_blocked(Cell::new(2, 1), true);
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"blocked\":[0,1,6,1,11,1]"), "{s}");
        let back: OccupancyGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = s.replace("[0,1,6,1,11,1]", "[0,1,6,1,11]");
        assert!(serde_json::from_str::<OccupancyGrid>(&bad).is_err());
    }

    proptest! {
        #[test]
        fn bearing_wraps_and_is_periodic(
            ax in -10.0..10.0f64, ay in -10.0..10.0f64,
            bx in -10.0..10.0f64, by in -10.0..10.0f64,
            h in -10.0..10.0f64, k in -3i32..3,
        ) {
            let a = Vec3::new(ax, ay, 0.0);
            let b = Vec3::new(bx, by, 0.5);
            let (d1, t1) = distance_bearing(&a, &b, h);
            let (d2, _) = distance_bearing(&b, &a, h);
            prop_assert!(t1 > -PI && t1 <= PI);
            prop_assert_eq!(d1, d2);
            let (_, t2) = distance_bearing(&a, &b, h + TAU * k as f64);
            let diff = wrap_angle(t1 - t2).abs();
            prop_assert!(diff < 1e-9);
        }

        #[test]
        fn panoramic_fov_is_range_test(
            x in -12.0..12.0f64, y in -12.0..12.0f64, h in 0.0..std::f64::consts::TAU, r in 0.1..15.0f64,
        ) {
            let obs = Pose::at(Vec3::ZERO, h);
            let t = Vec3::new(x, y, 0.0);
            prop_assert_eq!(in_fov(&obs, &t, TAU, r), t.norm() <= r);
        }

        #[test]
        fn los_symmetric(
            seed in any::<u64>(),
            ax in 0.0..2.0f64, ay in 0.0..2.0f64, bx in 0.0..2.0f64, by in 0.0..2.0f64,
        ) {
            let mut g = empty(20, 20);
            let mut s = seed;
            for i in 0..g.len() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                if (s >> 60) < 3 {
                    let c = g.cell_at(i);
                    g.set_blocked(c, true);
                }
            }
            let a = Vec3::new(ax, ay, 0.0);
            let b = Vec3::new(bx, by, 0.0);
            prop_assert_eq!(g.line_of_sight(&a, &b).unwrap(), g.line_of_sight(&b, &a).unwrap());
        }

        #[test]
        fn los_never_sees_through_sampled_blocked_cells(
            seed in any::<u64>(),
            ax in 0.0..2.0f64, ay in 0.0..2.0f64, bx in 0.0..2.0f64, by in 0.0..2.0f64,
        ) {
            let mut g = empty(20, 20);
            let mut s = seed;
            for i in 0..g.len() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                if (s >> 61) == 0 {
                    let c = g.cell_at(i);
                    g.set_blocked(c, true);
                }
            }
            let a = Vec3::new(ax, ay, 0.0);
            let b = Vec3::new(bx, by, 0.0);
            let sampled_blocked = (0..=2000).any(|k| {
                let t = k as f64 / 2000.0;
                let p = a + (b - a) * t;
                g.try_cell(&p).is_some_and(|c| g.is_blocked(c))
            });
            if sampled_blocked {
                prop_assert!(!g.line_of_sight(&a, &b).unwrap());
            }
        }

        #[test]
        fn cell_roundtrip(x in 0.0..0.999f64, y in 0.0..0.999f64) {
            let g = empty(10, 10);
            let c = g.world_to_cell(&Vec3::new(x, y, 0.0)).unwrap();
            let back = g.world_to_cell(&g.cell_to_world(c).unwrap()).unwrap();
            prop_assert_eq!(c, back);
        }
    }
}
