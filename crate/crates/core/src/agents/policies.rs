use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Pose, Vec3};
use crate::planner::{map_to_discrete, EpisodeSpec, Planner, PlannerConfig};
use crate::scene::Scene;
use crate::sim::{Action, CollisionKind, HumanObservation, Mode, SimConfig};

use super::navigator::Navigator;
use super::{AgentContext, AgentError, AgentKind, Decision, DecisionFlag, Policy, SOCIAL_MARGIN, WAIT_DISTANCE};

#[derive(Default)]
struct WaitPair {
    pending: bool,
}

impl WaitPair {
    fn finish(&mut self) -> Option<Decision> {
        std::mem::take(&mut self.pending).then_some(Decision {
            action: Action::Right,
            flag: Some(DecisionFlag::Wait),
        })
    }

    fn start(&mut self) -> Decision {
        self.pending = true;
        Decision {
            action: Action::Left,
            flag: Some(DecisionFlag::Wait),
        }
    }
}

fn no_path() -> Decision {
    Decision {
        action: Action::Stop,
        flag: Some(DecisionFlag::NoPath),
    }
}

fn locomote(nav: &mut Navigator, planner: &Planner, ctx: &AgentContext, avoid: &HashSet<String>) -> Decision {
    let pose = ctx.observation.agent;
    match ctx.config.mode {
        Mode::Continuous => Decision::act(nav.steer(ctx.scene, planner, &pose, ctx.config)),
        Mode::Discrete => nav
            .steer_discrete(&ctx.scene.nav_graph, ctx.de_node, &pose, ctx.config, avoid)
            .map_or_else(no_path, Decision::act),
    }
}

/// Follows the annotated ground-truth path and waits while a person stands
/// close ahead.
pub struct OracleFollower<'a> {
    planner: Planner<'a>,
    nav: Navigator,
    wait: WaitPair,
    waited: usize,
}

impl<'a> OracleFollower<'a> {
    pub fn new(
        scene: &'a Scene,
        episode: &EpisodeSpec,
        sim: &SimConfig,
        cfg: &PlannerConfig,
    ) -> Result<Self, AgentError> {
        let gt = episode
            .gt_path
            .as_ref()
            .ok_or_else(|| AgentError::MissingGroundTruth(episode.id.clone()))?;
        let mut nav = Navigator::new(gt.waypoints.clone(), episode.goal);
        if sim.mode == Mode::Discrete {
            nav.set_route(map_to_discrete(gt, &scene.nav_graph, cfg.snap_radius).unwrap_or_default());
        }
        Ok(OracleFollower {
            planner: Planner::new(scene, sim, cfg),
            nav,
            wait: WaitPair::default(),
            waited: 0,
        })
    }
}

impl Policy for OracleFollower<'_> {
    fn kind(&self) -> AgentKind {
        AgentKind::Oracle
    }

    fn act(&mut self, ctx: &AgentContext) -> Result<Decision, AgentError> {
        if let Some(d) = self.wait.finish() {
            return Ok(d);
        }
        let pose = ctx.observation.agent;
        if self.nav.at_goal(&pose, ctx.config) {
            return Ok(Decision::act(Action::Stop));
        }
        let cfg = ctx.config;
        let close: Vec<&HumanObservation> = ctx
            .observation
            .visible_humans
            .iter()
            .filter(|h| h.d_agent < WAIT_DISTANCE && h.theta_relative.abs() <= cfg.fov / 2.0)
            .collect();
        if close.is_empty() {
            self.waited = 0;
        } else {
            // after waiting out the patience window, a step that keeps clear
            // of everyone nearby is allowed so a lingering person cannot
            // stall the episode
            self.waited += 1;
            let landing = pose.position + Vec3::from_heading(pose.heading) * cfg.step_size;
            let clear = close
                .iter()
                .all(|h| landing.planar_distance(&h.position) >= Reactive::collision_reach(h, cfg));
            if self.waited <= self.planner.config().wait_patience || !clear {
                return Ok(self.wait.start());
            }
        }
        Ok(locomote(&mut self.nav, &self.planner, ctx, &HashSet::new()))
    }
}

/// Plans once on the static map and walks the plan, ignoring people.
pub struct Greedy<'a> {
    planner: Planner<'a>,
    nav: Option<Navigator>,
}

impl<'a> Greedy<'a> {
    pub fn new(scene: &'a Scene, episode: &EpisodeSpec, sim: &SimConfig, cfg: &PlannerConfig) -> Self {
        let planner = Planner::new(scene, sim, cfg);
        let nav = match sim.mode {
            Mode::Continuous => planner
                .plan(&episode.start.position, &episode.goal, &HashSet::new())
                .ok()
                .map(|p| Navigator::new(planner.to_result(&p).waypoints, episode.goal)),
            Mode::Discrete => Some(Navigator::new(Vec::new(), episode.goal)),
        };
        Greedy { planner, nav }
    }
}

impl Policy for Greedy<'_> {
    fn kind(&self) -> AgentKind {
        AgentKind::Greedy
    }

    fn act(&mut self, ctx: &AgentContext) -> Result<Decision, AgentError> {
        let Some(nav) = self.nav.as_mut() else {
            return Ok(no_path());
        };
        Ok(locomote(nav, &self.planner, ctx, &HashSet::new()))
    }
}

/// Treats observed people as temporary obstacles: waits when one blocks the
/// way ahead and replans around them once patience runs out.
pub struct Reactive<'a> {
    greedy: Greedy<'a>,
    wait: WaitPair,
    waited: usize,
    /// Where the last forward move ran into someone unseen.
    bump: Option<Vec3>,
}

impl<'a> Reactive<'a> {
    pub fn new(scene: &'a Scene, episode: &EpisodeSpec, sim: &SimConfig, cfg: &PlannerConfig) -> Self {
        Reactive {
            greedy: Greedy::new(scene, episode, sim, cfg),
            wait: WaitPair::default(),
            waited: 0,
            bump: None,
        }
    }

    fn reach(h: &HumanObservation, cfg: &SimConfig) -> f64 {
        cfg.agent_radius + h.radius + SOCIAL_MARGIN
    }

    fn collision_reach(h: &HumanObservation, cfg: &SimConfig) -> f64 {
        cfg.agent_radius + h.radius + 0.05
    }

    /// Whether some point ahead would touch a person, or comes inside their
    /// inflated disc while getting closer to them.
    fn blocked(points: &[Vec3], pose: &Pose, humans: &[HumanObservation], cfg: &SimConfig) -> bool {
        humans.iter().any(|h| {
            let here = pose.position.planar_distance(&h.position);
            let r = Self::reach(h, cfg);
            points.iter().any(|p| {
                let d = p.planar_distance(&h.position);
                d < Self::collision_reach(h, cfg) || (d < r && d < here)
            })
        })
    }
}

impl Policy for Reactive<'_> {
    fn kind(&self) -> AgentKind {
        AgentKind::Reactive
    }

    fn act(&mut self, ctx: &AgentContext) -> Result<Decision, AgentError> {
        if let Some(d) = self.wait.finish() {
            return Ok(d);
        }
        let cfg = ctx.config;
        let pose = ctx.observation.agent;
        let planner = &self.greedy.planner;
        let Some(nav) = self.greedy.nav.as_mut() else {
            return Ok(no_path());
        };
        let humans = &ctx.observation.visible_humans;
        let bumped = ctx.last_collision.is_some_and(|c| c.kind == CollisionKind::Human);
        match cfg.mode {
            Mode::Continuous => {
                if nav.at_goal(&pose, cfg) {
                    return Ok(Decision::act(Action::Stop));
                }
                let mut ahead = nav.upcoming(&pose, cfg.step_size + cfg.agent_radius);
                ahead.push(pose.position + Vec3::from_heading(pose.heading) * cfg.step_size);
                if !(bumped || Self::blocked(&ahead, &pose, humans, cfg)) {
                    self.waited = 0;
                    return Ok(locomote(nav, planner, ctx, &HashSet::new()));
                }
                self.waited += 1;
                if self.waited <= planner.config().wait_patience {
                    return Ok(self.wait.start());
                }
                self.waited = 0;
                if bumped {
                    self.bump = Some(pose.position + Vec3::from_heading(pose.heading) * cfg.step_size);
                }
                let bump = self.bump.take();
                let blocked_cells = |margin: f64| -> HashSet<usize> {
                    humans
                        .iter()
                        .map(|h| (h.position, h.radius + margin))
                        .chain(bump.map(|p| (p, 0.3)))
                        .flat_map(|(p, r)| planner.human_cells(&p, r))
                        .collect()
                };
                let replanned = [SOCIAL_MARGIN, 0.0]
                    .into_iter()
                    .find_map(|m| planner.plan(&pose.position, &ctx.episode.goal, &blocked_cells(m)).ok());
                match replanned {
                    Some(p) => {
                        nav.set_path(planner.to_result(&p).waypoints);
                        Ok(locomote(nav, planner, ctx, &HashSet::new()))
                    }
                    None => Ok(self.wait.start()),
                }
            }
            Mode::Discrete => {
                let graph = &ctx.scene.nav_graph;
                let (Some(here), Some((goal_node, _))) = (ctx.de_node, graph.nearest(&ctx.episode.goal)) else {
                    return Ok(no_path());
                };
                let avoid: HashSet<String> = graph
                    .nodes
                    .iter()
                    .filter(|(id, p)| {
                        id.as_str() != here
                            && id.as_str() != goal_node
                            && humans.iter().any(|h| p.planar_distance(&h.position) < Self::reach(h, cfg))
                    })
                    .map(|(id, _)| id.clone())
                    .collect();
                let next = nav.next_node(graph, here, goal_node, &HashSet::new());
                let stuck = bumped || next.is_some_and(|n| avoid.contains(&n));
                if !stuck {
                    self.waited = 0;
                    return Ok(locomote(nav, planner, ctx, &HashSet::new()));
                }
                self.waited += 1;
                if self.waited <= planner.config().wait_patience {
                    return Ok(self.wait.start());
                }
                self.waited = 0;
                if nav.next_node(graph, here, goal_node, &avoid).is_some() {
                    Ok(locomote(nav, planner, ctx, &avoid))
                } else {
                    Ok(self.wait.start())
                }
            }
        }
    }
}

/// Uniform over forward and the two turns, stopping on the last allowed step.
pub struct Random {
    rng: ChaCha8Rng,
}

impl Random {
    pub fn new(seed: u64) -> Self {
        Random {
            rng: crate::seed::rng(seed),
        }
    }
}

impl Policy for Random {
    fn kind(&self) -> AgentKind {
        AgentKind::Random
    }

    fn act(&mut self, ctx: &AgentContext) -> Result<Decision, AgentError> {
        if ctx.step + 1 >= ctx.config.max_steps {
            return Ok(Decision::act(Action::Stop));
        }
        const CHOICES: [Action; 3] = [Action::Forward, Action::Left, Action::Right];
        Ok(Decision::act(CHOICES[self.rng.gen_range(0..3)]))
    }
}
