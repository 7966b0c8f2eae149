mod common;

use std::f64::consts::PI;

use havln::agents::{make_policy, AgentContext, AgentError, AgentKind, DecisionFlag};
use havln::planner::{annotate_ground_truth, EpisodeSpec, PlannerConfig};
use havln::runner::run_episode;
use havln::sim::{reset, Action, SimConfig};
use havln::synth::{gen_episodes, gen_scene, SceneParams};
use havln::{Cell, Pose, Scene, Vec3};
use proptest::prelude::*;

use common::*;

fn annotated(scene: &Scene, start: Pose, goal: Vec3, sim: &SimConfig) -> EpisodeSpec {
    let ep = EpisodeSpec::new("e", scene.id.clone(), start, goal);
    annotate_ground_truth(scene, &ep, sim, &PlannerConfig::default())
}

fn first_decision(kind: AgentKind, scene: &Scene, ep: &EpisodeSpec, sim: &SimConfig) -> Vec<(Action, Option<DecisionFlag>)> {
    let (_, obs) = reset(scene, ep.start, sim, 0).unwrap();
    let mut policy = make_policy(kind, scene, ep, sim, &PlannerConfig::default(), 0).unwrap();
    let mut out = Vec::new();
    for step in 0..2 {
        let ctx = AgentContext {
            scene,
            episode: ep,
            observation: &obs,
            config: sim,
            step,
            last_collision: None,
            de_node: None,
        };
        let d = policy.act(&ctx).unwrap();
        out.push((d.action, d.flag));
    }
    out
}

#[test]
fn oracle_stops_at_goal() {
    let scene = empty_scene("open", 100, 100, 0.1);
    let sim = SimConfig::default();
    let ep = annotated(&scene, Pose::at(Vec3::new(5.0, 5.0, 0.0), 0.0), Vec3::new(5.4, 5.3, 0.0), &sim);
    assert_eq!(first_decision(AgentKind::Oracle, &scene, &ep, &sim)[0].0, Action::Stop);
}

#[test]
fn oracle_turns_toward_a_waypoint_on_its_right() {
    let scene = empty_scene("open", 100, 100, 0.1);
    let sim = SimConfig::default();
    // goal 0.5 rad to the right of the heading, 4 m away
    let start = Vec3::new(2.0, 2.0, 0.0);
    let goal = start + Vec3::from_heading(0.5) * 4.0;
    let ep = annotated(&scene, Pose::at(start, 0.0), goal, &sim);
    assert_eq!(first_decision(AgentKind::Oracle, &scene, &ep, &sim)[0].0, Action::Right);
}

#[test]
fn oracle_waits_for_a_person_dead_ahead() {
    let mut scene = empty_scene("open", 100, 100, 0.1);
    scene.humans.push(still_human("h", Vec3::new(5.6, 5.0, 0.0)));
    let sim = SimConfig::default();
    let ep = annotated(&scene, Pose::at(Vec3::new(5.0, 5.0, 0.0), 0.0), Vec3::new(9.0, 8.0, 0.0), &sim);
    assert!(ep.gt_path.is_some());
    let d = first_decision(AgentKind::Oracle, &scene, &ep, &sim);
    assert_eq!(
        d,
        [(Action::Left, Some(DecisionFlag::Wait)), (Action::Right, Some(DecisionFlag::Wait))]
    );
}

#[test]
fn oracle_needs_a_ground_truth_path() {
    let scene = empty_scene("open", 50, 50, 0.1);
    let ep = EpisodeSpec::new("e", "open", Pose::at(Vec3::new(1.0, 1.0, 0.0), 0.0), Vec3::new(4.0, 4.0, 0.0));
    let err = make_policy(AgentKind::Oracle, &scene, &ep, &SimConfig::default(), &PlannerConfig::default(), 0).err();
    assert!(matches!(err, Some(AgentError::MissingGroundTruth(_))));
}

#[test]
fn greedy_walks_into_a_person_and_reactive_does_not() {
    let mut scene = empty_scene("open", 100, 40, 0.1);
    scene.humans.push(still_human("h", Vec3::new(5.0, 2.0, 0.0)));
    let sim = SimConfig::default();
    let start = Pose::at(Vec3::new(1.0, 2.0, 0.0), 0.0);
    let goal = Vec3::new(9.0, 2.0, 0.0);
    let ep = EpisodeSpec::new("e", "open", start, goal);
    let cfg = PlannerConfig::default();
    let greedy = run_episode(&scene, &ep, AgentKind::Greedy, &sim, &cfg, 0).unwrap();
    assert!(greedy.record.c > 0);
    let reactive = run_episode(&scene, &ep, AgentKind::Reactive, &sim, &cfg, 0).unwrap();
    assert_eq!(reactive.record.c, 0);
    assert!(reactive.record.stopped && reactive.record.d <= 3.0);
}

#[test]
fn greedy_stops_at_once_when_the_goal_is_walled_off() {
    let mut scene = empty_scene("walled", 60, 60, 0.1);
    for i in 0..60 {
        scene.grid.set_blocked(Cell::new(30, i), true);
    }
    let ep = EpisodeSpec::new("e", "walled", Pose::at(Vec3::new(1.0, 3.0, 0.0), 0.0), Vec3::new(5.0, 3.0, 0.0));
    let run = run_episode(&scene, &ep, AgentKind::Greedy, &SimConfig::default(), &PlannerConfig::default(), 0).unwrap();
    assert_eq!(run.log.len(), 1);
    assert_eq!(run.log[0].action, Action::Stop);
    assert_eq!(run.log[0].flags, ["no_path"]);
}

/// A person crosses the corridor back and forth; the reactive agent has to
/// wait for gaps and still arrive.
#[test]
fn reactive_gets_through_a_periodically_blocked_corridor() {
    let mut scene = empty_scene("corridor", 120, 20, 0.1);
    scene.humans.push(shuttle_human("h", Vec3::new(6.0, 0.4, 0.0), Vec3::new(6.0, 1.6, 0.0), 90));
    let sim = SimConfig::default();
    let cfg = PlannerConfig::default();
    let ep = annotated(&scene, Pose::at(Vec3::new(1.0, 1.0, 0.0), 0.0), Vec3::new(11.0, 1.0, 0.0), &sim);
    // the idealized follower confirms a collision-free crossing exists
    assert!(ep.gt_path.is_some());
    assert_eq!(ep.unavoidable_encounters, 0);
    let run = run_episode(&scene, &ep, AgentKind::Reactive, &sim, &cfg, 0).unwrap();
    assert!(run.record.stopped && run.record.d <= 3.0, "{:?}", run.record);
    let oracle = run_episode(&scene, &ep, AgentKind::Oracle, &sim, &cfg, 0).unwrap();
    assert!(oracle.record.stopped && oracle.record.d <= 3.0, "{:?}", oracle.record);
}

#[test]
fn greedy_and_oracle_coincide_without_people() {
    let scene = gen_scene(&SceneParams {
        seed: 3,
        human_count: 0,
        ..SceneParams::default()
    })
    .unwrap();
    let sim = SimConfig::default();
    let cfg = PlannerConfig::default();
    for ep in gen_episodes(&scene, 5, 3, &sim, &cfg).unwrap() {
        let a = run_episode(&scene, &ep, AgentKind::Oracle, &sim, &cfg, 0).unwrap();
        let b = run_episode(&scene, &ep, AgentKind::Greedy, &sim, &cfg, 0).unwrap();
        let actions = |r: &havln::runner::EpisodeRun| r.log.iter().map(|l| l.action).collect::<Vec<_>>();
        assert_eq!(actions(&a), actions(&b), "{}", ep.id);
    }
}

#[test]
fn random_is_uniform_over_forward_and_turns() {
    let scene = empty_scene("open", 40, 40, 0.1);
    let sim = SimConfig {
        max_steps: 10_001,
        ..SimConfig::default()
    };
    let ep = EpisodeSpec::new("e", "open", Pose::at(Vec3::new(2.0, 2.0, 0.0), 0.0), Vec3::new(3.0, 3.0, 0.0));
    let run = run_episode(&scene, &ep, AgentKind::Random, &sim, &PlannerConfig::default(), 42).unwrap();
    let draws = &run.log[..run.log.len() - 1];
    assert_eq!(draws.len(), 10_000);
    let count = |a: Action| draws.iter().filter(|l| l.action == a).count() as f64;
    let expected = draws.len() as f64 / 3.0;
    let chi2: f64 = [Action::Forward, Action::Left, Action::Right]
        .iter()
        .map(|a| (count(*a) - expected).powi(2) / expected)
        .sum();
    // 99.9th percentile of chi-squared with 2 degrees of freedom
    assert!(chi2 < 13.82, "chi2 = {chi2}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_is_seeded_and_stops_on_the_last_step(seed_v in any::<u64>(), max_steps in 1usize..40) {
        let scene = empty_scene("open", 40, 40, 0.1);
        let sim = SimConfig { max_steps, ..SimConfig::default() };
        let ep = EpisodeSpec::new("e", "open", Pose::at(Vec3::new(2.0, 2.0, 0.0), PI / 3.0), Vec3::new(3.0, 3.0, 0.0));
        let cfg = PlannerConfig::default();
        let a = run_episode(&scene, &ep, AgentKind::Random, &sim, &cfg, seed_v).unwrap();
        let b = run_episode(&scene, &ep, AgentKind::Random, &sim, &cfg, seed_v).unwrap();
        prop_assert_eq!(&a.log, &b.log);
        prop_assert_eq!(a.log.len(), max_steps);
        prop_assert_eq!(a.log.last().unwrap().action, Action::Stop);
        prop_assert!(a.log[..max_steps - 1].iter().all(|l| l.action != Action::Stop));
    }

    /// Every policy ends within the step budget using only the six actions.
    #[test]
    fn policies_terminate_within_budget(seed_v in 0u64..1000, agent in 0usize..4) {
        let scene = gen_scene(&SceneParams { seed: seed_v % 8, ..SceneParams::default() }).unwrap();
        let sim = SimConfig { max_steps: 150, ..SimConfig::default() };
        let cfg = PlannerConfig::default();
        let eps = gen_episodes(&scene, 1, seed_v, &sim, &cfg).unwrap();
        let kind = AgentKind::ALL[agent];
        let run = run_episode(&scene, &eps[0], kind, &sim, &cfg, seed_v);
        match run {
            Ok(run) => prop_assert!(run.log.len() <= 150 && !run.log.is_empty()),
            Err(e) => prop_assert!(kind == AgentKind::Oracle && eps[0].gt_path.is_none(), "{}", e),
        }
    }
}
