use std::collections::HashSet;

use crate::geometry::Vec3;
use crate::scene::Scene;
use crate::sim::SimConfig;

use super::{step, EpisodeSpec, GridPath, HumanInfluence, PlanResult, Planner, PlannerConfig, MOVES};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Planner<'_> {
    /// First human whose inflated disc covers `idx` at `clock`.
    fn occupant(&self, idx: usize, clock: u64, only: Option<usize>) -> Option<usize> {
        (0..self.tracks.len())
            .filter(|h| only.is_none_or(|o| o == *h))
            .find(|&h| self.tracks[h].covers(self.frame_at(h, clock), idx))
    }

    /// Idealized follower: one cell per tick along the current plan, waiting
    /// while the next cell is occupied at arrival time and replanning around
    /// the blocking human once patience runs out.
    pub fn plan_with_replanning(&self, start: &Vec3, goal: &Vec3) -> PlanResult {
        let none = HashSet::new();
        let Ok(mut path) = self.plan(start, goal, &none) else {
            return PlanResult::unreachable();
        };
        if self.tracks.is_empty() {
            return self.to_result(&path);
        }
        let goal_idx = self.grid.index(*path.cells.last().unwrap());
        let mut cur = self.grid.index(path.cells[0]);
        let mut visited = vec![path.cells[0]];
        let (mut orth, mut diag) = (0usize, 0usize);
        let mut at = 0usize;
        let mut waited = 0usize;
        let mut replans = 0usize;
        let mut clock = 0u64;
        for _ in 0..self.tick_budget() {
            if cur == goal_idx {
                break;
            }
            let next = self.grid.index(path.cells[at + 1]);
            let arrival = clock + self.signals_per_cell;
            match self.occupant(next, arrival, None) {
                None => {
                    let (a, b) = (self.grid.cell_at(cur), self.grid.cell_at(next));
                    if a.col != b.col && a.row != b.row {
                        diag += 1;
                    } else {
                        orth += 1;
                    }
                    visited.push(b);
                    cur = next;
                    at += 1;
                    waited = 0;
                }
                Some(h) => {
                    waited += 1;
                    if waited > self.cfg.wait_patience {
                        waited = 0;
                        let extra: HashSet<usize> = self.tracks[h].frames[self.frame_at(h, clock)]
                            .iter()
                            .copied()
                            .filter(|&i| i != cur)
                            .collect();
                        let here = self.grid.cell_center(self.grid.cell_at(cur));
                        if let Ok(p) = self.plan(&here, goal, &extra) {
                            path = p;
                            at = 0;
                            replans += 1;
                        }
                    }
                }
            }
            clock = arrival;
        }
        if cur != goal_idx {
            return PlanResult {
                replans,
                ..PlanResult::unreachable()
            };
        }
        let walked = GridPath {
            cells: visited,
            orthogonal: orth,
            diagonal: diag,
        };
        PlanResult {
            replans,
            ..self.to_result(&walked)
        }
    }

    /// Whether a collision-free arrival exists when `human` is the only one
    /// present, by breadth-first search over (cell, motion phase) states.
    pub fn avoidable(&self, start: &Vec3, goal: &Vec3, human: usize, static_path: &GridPath) -> bool {
        let track = &self.tracks[human];
        let touches = static_path
            .cells
            .iter()
            .any(|c| track.swept.contains(&self.grid.index(*c)));
        if !touches {
            return true;
        }
        let (Ok(s), Ok(g)) = (self.cell_of(start), self.cell_of(goal)) else {
            return false;
        };
        let n = track.frames.len() as u64;
        let period = (n / gcd(n, self.signals_per_cell)) as usize;
        let blocked = |i: usize| i != s && self.grid.is_blocked(self.grid.cell_at(i));
        let mut seen = vec![false; self.grid.len() * period];
        seen[s * period] = true;
        let mut frontier = vec![s];
        for t in 0..self.tick_budget() {
            if frontier.is_empty() {
                return false;
            }
            let phase = ((t + 1) % period as u64) as usize;
            let frame = self.frame_at(human, (t + 1) * self.signals_per_cell);
            let mut next = Vec::new();
            for &i in &frontier {
                let stay = std::iter::once(Some(i));
                for j in stay.chain(MOVES.iter().map(|mv| step(&self.grid, i, *mv, &blocked))).flatten() {
                    if track.covers(frame, j) {
                        continue;
                    }
                    if j == g {
                        return true;
                    }
                    let k = j * period + phase;
                    if !seen[k] {
                        seen[k] = true;
                        next.push(j);
                    }
                }
            }
            frontier = next;
        }
        false
    }

    /// Humans for which no collision-free arrival exists on their own.
    pub fn unavoidable_encounters(&self, start: &Vec3, goal: &Vec3) -> usize {
        let Ok(path) = self.plan(start, goal, &HashSet::new()) else {
            return 0;
        };
        if self.grid.index(path.cells[0]) == self.grid.index(*path.cells.last().unwrap()) {
            return 0;
        }
        (0..self.tracks.len())
            .filter(|&h| !self.avoidable(start, goal, h, &path))
            .count()
    }

    /// Direct when some human's disc comes within the influence distance of
    /// a waypoint at any frame; indirect when some human is in panoramic
    /// view from a waypoint.
    pub fn influence(&self, waypoints: &[Vec3]) -> HumanInfluence {
        let scene = self.scene;
        let direct = scene.humans.iter().any(|h| {
            h.playback_positions().any(|p| {
                waypoints
                    .iter()
                    .any(|w| w.planar_distance(&p) - h.radius() <= self.cfg.influence_distance)
            })
        });
        if direct {
            return HumanInfluence::Direct;
        }
        let range = self.sim.observe_range;
        let visible = scene.humans.iter().any(|h| {
            let mut seen_cells = HashSet::new();
            h.playback_positions()
                .filter(|p| scene.grid.try_cell(p).is_some_and(|c| seen_cells.insert(c)))
                .any(|p| {
                    waypoints.iter().any(|w| {
                        w.distance(&p) <= range && scene.grid.line_of_sight(w, &p).unwrap_or(false)
                    })
                })
        });
        if visible {
            HumanInfluence::Indirect
        } else {
            HumanInfluence::None
        }
    }

    /// Fills in the ground-truth path, influence label, and unavoidable
    /// encounter count. An episode whose follower cannot reach the goal
    /// keeps no path and is labeled from the static route instead.
    pub fn annotate(&self, episode: &EpisodeSpec) -> EpisodeSpec {
        let mut out = episode.clone();
        let start = episode.start.position;
        let goal = episode.goal;
        let Ok(static_path) = self.plan(&start, &goal, &HashSet::new()) else {
            out.gt_path = None;
            out.human_influence = HumanInfluence::None;
            out.unavoidable_encounters = 0;
            return out;
        };
        let unavoidable = self.unavoidable_encounters(&start, &goal);
        let mut gt = self.plan_with_replanning(&start, &goal);
        let labeled = if gt.reachable {
            gt.unavoidable_encounters = unavoidable;
            gt.waypoints.clone()
        } else {
            self.to_result(&static_path).waypoints
        };
        out.human_influence = self.influence(&labeled);
        out.unavoidable_encounters = unavoidable;
        out.gt_path = gt.reachable.then_some(gt);
        out
    }
}

pub fn plan_with_replanning(
    scene: &Scene,
    episode: &EpisodeSpec,
    sim: &SimConfig,
    cfg: &PlannerConfig,
) -> PlanResult {
    Planner::new(scene, sim, cfg).plan_with_replanning(&episode.start.position, &episode.goal)
}

pub fn annotate_ground_truth(
    scene: &Scene,
    episode: &EpisodeSpec,
    sim: &SimConfig,
    cfg: &PlannerConfig,
) -> EpisodeSpec {
    Planner::new(scene, sim, cfg).annotate(episode)
}
