use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::scene::{Region, SceneObject};
use crate::seed;

pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_PROXIMITY: f64 = 1.0;
pub const DEFAULT_HEIGHT_OFFSET: f64 = 0.75;
const PENALTY_BASE: f64 = 10.0;
const PENALTY_SCALE: f64 = 10.0;

/// Constraint bundle for placing one human next to its paired object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementProblem {
    pub region: Region,
    pub target: SceneObject,
    #[serde(default)]
    pub others: Vec<SceneObject>,
    /// Minimum clearance to every non-target object.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Maximum distance to the target object.
    #[serde(default = "default_proximity")]
    pub proximity: f64,
    /// When set, the human must sit at least this far above the target.
    #[serde(default)]
    pub height_offset: Option<f64>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_proximity() -> f64 {
    DEFAULT_PROXIMITY
}

impl PlacementProblem {
    pub fn new(region: Region, target: SceneObject, others: Vec<SceneObject>) -> Self {
        PlacementProblem {
            region,
            target,
            others,
            epsilon: DEFAULT_EPSILON,
            proximity: DEFAULT_PROXIMITY,
            height_offset: None,
        }
    }

    fn check(&self) -> Result<(), PlacementError> {
        let bad = |m: &str| Err(PlacementError::InvalidProblem(m.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.proximity > 0.0) {
            return bad("proximity must be positive");
        }
        let b = &self.region.bbox;
        if !b.is_well_formed() || !(b.hi.x > b.lo.x && b.hi.y > b.lo.y) {
            return bad("region footprint is degenerate");
        }
        if !b.contains(&self.target.position) {
            return bad("target object lies outside the region");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Proximity,
    SafeDistance,
    Region,
    HeightOffset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation {
    pub kind: ConstraintKind,
    /// How far past the limit the candidate sits, in meters.
    pub magnitude: f64,
}

pub fn constraint_violations(p: &Vec3, problem: &PlacementProblem) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    let d_target = p.distance(&problem.target.position);
    if d_target > problem.proximity {
        out.push(ConstraintViolation {
            kind: ConstraintKind::Proximity,
            magnitude: d_target - problem.proximity,
        });
    }
    for other in &problem.others {
        let d = p.distance(&other.position);
        if d < problem.epsilon {
            out.push(ConstraintViolation {
                kind: ConstraintKind::SafeDistance,
                magnitude: problem.epsilon - d,
            });
        }
    }
    let outside = problem.region.bbox.distance_outside(p);
    if outside > 0.0 {
        out.push(ConstraintViolation {
            kind: ConstraintKind::Region,
            magnitude: outside,
        });
    }
    if let Some(dz) = problem.height_offset {
        let floor = problem.target.position.z + dz;
        if p.z < floor {
            out.push(ConstraintViolation {
                kind: ConstraintKind::HeightOffset,
                magnitude: floor - p.z,
            });
        }
    }
    out
}

/// Penalty part of the fitness; zero iff every constraint holds.
pub fn penalty(p: &Vec3, problem: &PlacementProblem) -> f64 {
    constraint_violations(p, problem)
        .iter()
        .map(|v| PENALTY_BASE + PENALTY_SCALE * v.magnitude)
        .sum()
}

/// Distance to the target object plus constraint penalties; lower is better.
pub fn fitness(p: &Vec3, problem: &PlacementProblem) -> f64 {
    p.distance(&problem.target.position) + penalty(p, problem)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub particle_count: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Best-fitness improvement below which an iteration counts as stalled.
    pub convergence_eps: f64,
    /// Consecutive stalled iterations that end the search.
    pub stall_iterations: usize,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams {
            particle_count: 40,
            iterations: 200,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            convergence_eps: 1e-4,
            stall_iterations: 25,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("no placement satisfies every constraint (best fitness {best_fitness})")]
    Infeasible { best_fitness: f64 },
    #[error("invalid placement problem: {0}")]
    InvalidProblem(String),
    #[error("invalid swarm parameters: {0}")]
    InvalidParams(String),
}

struct Swarm {
    best: Vec3,
    best_fitness: f64,
}

fn coords(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn run_swarm(problem: &PlacementProblem, params: &PsoParams, seed: u64) -> Swarm {
    let mut rng = seed::rng(seed);
    let bbox = &problem.region.bbox;
    let lo = coords(&bbox.lo);
    let hi = coords(&bbox.hi);
    let span: [f64; 3] = std::array::from_fn(|d| hi[d] - lo[d]);
    let vmax: [f64; 3] = std::array::from_fn(|d| 0.5 * span[d]);
    let n = params.particle_count;

    let mut x: Vec<[f64; 3]> = (0..n)
        .map(|_| std::array::from_fn(|d| lo[d] + rng.gen::<f64>() * span[d]))
        .collect();
    let mut v: Vec<[f64; 3]> = (0..n)
        .map(|_| std::array::from_fn(|d| (rng.gen::<f64>() * 2.0 - 1.0) * 0.1 * span[d]))
        .collect();
    let eval = |p: &[f64; 3]| fitness(&Vec3::new(p[0], p[1], p[2]), problem);
    let mut pbest = x.clone();
    let mut pbest_f: Vec<f64> = x.iter().map(eval).collect();
    let mut g = 0;
    for i in 1..n {
        if pbest_f[i] < pbest_f[g] {
            g = i;
        }
    }
    let mut gbest = pbest[g];
    let mut gbest_f = pbest_f[g];
    let mut stalled = 0;

    for _ in 0..params.iterations {
        let before = gbest_f;
        for i in 0..n {
            for d in 0..3 {
                if span[d] == 0.0 {
                    continue;
                }
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let vel = params.inertia * v[i][d]
                    + params.cognitive * r1 * (pbest[i][d] - x[i][d])
                    + params.social * r2 * (gbest[d] - x[i][d]);
                v[i][d] = vel.clamp(-vmax[d], vmax[d]);
                let next = x[i][d] + v[i][d];
                if next < lo[d] || next > hi[d] {
                    v[i][d] = 0.0;
                }
                x[i][d] = next.clamp(lo[d], hi[d]);
            }
            let f = eval(&x[i]);
            if f < pbest_f[i] {
                pbest_f[i] = f;
                pbest[i] = x[i];
                if f < gbest_f {
                    gbest_f = f;
                    gbest = x[i];
                }
            }
        }
        if before - gbest_f < params.convergence_eps {
            stalled += 1;
            if stalled >= params.stall_iterations {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Swarm {
        best: Vec3::new(gbest[0], gbest[1], gbest[2]),
        best_fitness: gbest_f,
    }
}

/// Runs the swarm over the region box and returns the best position found.
/// A result with any constraint penalty triggers one retry with twice the
/// particles and iterations before reporting `Infeasible`.
pub fn pso_place(problem: &PlacementProblem, params: &PsoParams) -> Result<Vec3, PlacementError> {
    problem.check()?;
    if params.particle_count < 2 || params.iterations < 1 {
        return Err(PlacementError::InvalidParams(
            "need at least 2 particles and 1 iteration".into(),
        ));
    }
    let first = run_swarm(problem, params, params.seed);
    if penalty(&first.best, problem) == 0.0 {
        return Ok(first.best);
    }
    let retry = PsoParams {
        particle_count: params.particle_count * 2,
        iterations: params.iterations * 2,
        ..params.clone()
    };
    let second = run_swarm(problem, &retry, seed::child(params.seed, "pso-retry", 1));
    if penalty(&second.best, problem) == 0.0 {
        return Ok(second.best);
    }
    Err(PlacementError::Infeasible {
        best_fitness: first.best_fitness.min(second.best_fitness),
    })
}
