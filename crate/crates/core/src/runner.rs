//! Episode execution, trajectory logs, and batch runs.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{make_policy, AgentContext, AgentError, AgentKind, DecisionFlag};
use crate::geometry::Pose;
use crate::metrics::{
    aggregate_report, compute_metrics, is_success, record_from_entries, record_from_log, EpisodeRecord,
    EvalReport, MetricsError, SUCCESS_DISTANCE,
};
use crate::planner::{EpisodeSpec, PlannerConfig};
use crate::scene::{load_scene, Scene, SceneError};
use crate::seed;
use crate::sim::{apply_action, reset, Action, CollisionEvent, SimConfig, SimError, StepFlag};

/// One line of a trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    pub action: Action,
    pub pre_pose: Pose,
    pub post_pose: Pose,
    pub frame_index: usize,
    pub collision: Option<CollisionEvent>,
    pub visible_human_ids: Vec<String>,
    #[serde(default)]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode_id: String,
    pub agent: AgentKind,
    pub steps: usize,
    pub collisions: usize,
    pub final_distance: f64,
    pub success: bool,
}

#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub log: Vec<LogRecord>,
    pub record: EpisodeRecord,
    pub summary: EpisodeSummary,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("episode `{episode}` belongs to scene `{expected}`, not `{found}`")]
    SceneMismatch {
        episode: String,
        expected: String,
        found: String,
    },
    #[error("episode `{episode}` refers to unknown scene `{scene}`")]
    UnknownScene { episode: String, scene: String },
    #[error("episode `{0}`: {1}")]
    Sim(String, SimError),
    #[error("episode `{0}`: {1}")]
    Agent(String, AgentError),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {source}", .path.display())]
    Scene {
        path: PathBuf,
        #[source]
        source: SceneError,
    },
    #[error("{0}")]
    Metrics(#[from] MetricsError),
    #[error("manifest lists no episodes")]
    EmptyManifest,
    #[error("{} episode(s) failed", .0.len())]
    Failed(Vec<String>),
}

fn flag_name(f: StepFlag) -> &'static str {
    match f {
        StepFlag::NoValidHop => "no_valid_hop",
        StepFlag::ProximityWarning => "proximity_warning",
    }
}

fn decision_flag_name(f: DecisionFlag) -> &'static str {
    match f {
        DecisionFlag::Wait => "wait",
        DecisionFlag::NoPath => "no_path",
    }
}

/// Runs one episode from reset until the agent stops or the step budget is
/// exhausted.
pub fn run_episode(
    scene: &Scene,
    episode: &EpisodeSpec,
    agent: AgentKind,
    sim: &SimConfig,
    planner: &PlannerConfig,
    seed: u64,
) -> Result<EpisodeRun, RunError> {
    if episode.scene_id != scene.id {
        return Err(RunError::SceneMismatch {
            episode: episode.id.clone(),
            expected: episode.scene_id.clone(),
            found: scene.id.clone(),
        });
    }
    let sim_err = |e| RunError::Sim(episode.id.clone(), e);
    let agent_err = |e| RunError::Agent(episode.id.clone(), e);
    let (mut state, mut observation) = reset(scene, episode.start, sim, seed).map_err(sim_err)?;
    let mut policy = make_policy(agent, scene, episode, sim, planner, seed).map_err(agent_err)?;
    let mut last_collision: Option<CollisionEvent> = None;
    let mut log = Vec::new();
    while state.is_running() {
        let ctx = AgentContext {
            scene,
            episode,
            observation: &observation,
            config: sim,
            step: state.step_count,
            last_collision: last_collision.as_ref(),
            de_node: state.de_node.as_deref(),
        };
        let decision = policy.act(&ctx).map_err(agent_err)?;
        let pre_pose = state.agent;
        let result = apply_action(&mut state, scene, decision.action, sim).map_err(sim_err)?;
        let mut flags: Vec<String> = decision
            .flag
            .map(|f| decision_flag_name(f).to_string())
            .into_iter()
            .collect();
        flags.extend(result.flags.iter().map(|f| flag_name(*f).to_string()));
        log.push(LogRecord {
            step: log.len(),
            action: decision.action,
            pre_pose,
            post_pose: state.agent,
            frame_index: result.observation.frame_index,
            collision: result.collision.clone(),
            visible_human_ids: result
                .observation
                .visible_humans
                .iter()
                .map(|h| h.human_id.clone())
                .collect(),
            flags,
        });
        observation = result.observation;
        last_collision = result.collision;
    }
    let record = record_from_entries(&log, episode);
    let summary = EpisodeSummary {
        episode_id: episode.id.clone(),
        agent,
        steps: log.len(),
        collisions: record.c,
        final_distance: record.d,
        success: is_success(&record, SUCCESS_DISTANCE),
    };
    Ok(EpisodeRun { log, record, summary })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_log(path: &Path, log: &[LogRecord]) -> Result<(), RunError> {
    let mut out = Vec::new();
    for rec in log {
        serde_json::to_writer(&mut out, rec).expect("log records serialize");
        out.push(b'\n');
    }
    write_file(path, &out)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    write_file(path, s.as_bytes())
}

pub fn load_scene_file(path: &Path) -> Result<Scene, RunError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    load_scene(BufReader::new(f)).map_err(|source| RunError::Scene {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads episodes from a JSON array, a single JSON object, or JSON lines.
pub fn load_episodes(path: &Path) -> Result<Vec<EpisodeSpec>, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |message: String| RunError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()));
    }
    if let Ok(one) = serde_json::from_str::<EpisodeSpec>(&text) {
        return Ok(vec![one]);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Batch run description. Relative paths resolve against the manifest's
/// own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenes: Vec<PathBuf>,
    pub episodes: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentKind>,
    /// Simulator settings; omitted fields keep their defaults.
    #[serde(default)]
    pub config: SimConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default = "default_split")]
    pub split: String,
}

fn default_split() -> String {
    "default".into()
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut m: RunManifest = serde_json::from_str(&text).map_err(|e| RunError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        m.scenes = m.scenes.iter().map(resolve).collect();
        m.episodes = m.episodes.iter().map(resolve).collect();
        m.out_dir = resolve(&m.out_dir);
        Ok(m)
    }

    /// Agents to run, in listed order without repeats; oracle when none is
    /// named.
    pub fn agent_list(&self) -> Vec<AgentKind> {
        let mut out: Vec<AgentKind> = Vec::new();
        for a in self.agent.iter().chain(&self.agents) {
            if !out.contains(a) {
                out.push(*a);
            }
        }
        if out.is_empty() {
            out.push(AgentKind::Oracle);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub reports: Vec<(String, String, EvalReport)>,
    pub summaries: Vec<EpisodeSummary>,
    pub errors: Vec<String>,
}

/// Runs every episode for every agent, writes one log per episode and one
/// report per agent under `out_dir`, plus a comparison table. Episodes run in
/// parallel; outputs depend only on the manifest.
pub fn run_batch(manifest: &RunManifest, continue_on_error: bool) -> Result<BatchOutcome, RunError> {
    for p in manifest.scenes.iter().chain(&manifest.episodes) {
        if !p.exists() {
            return Err(RunError::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file not found"),
            });
        }
    }
    let scenes = manifest
        .scenes
        .iter()
        .map(|p| load_scene_file(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut errors = Vec::new();
    let mut episodes = Vec::new();
    for p in &manifest.episodes {
        match load_episodes(p) {
            Ok(eps) => episodes.extend(eps),
            Err(e) if continue_on_error => errors.push(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    if episodes.is_empty() && errors.is_empty() {
        return Err(RunError::EmptyManifest);
    }
    let out = &manifest.out_dir;
    let mut reports = Vec::new();
    let mut summaries = Vec::new();
    for agent in manifest.agent_list() {
        let runs: Vec<Result<EpisodeRun, RunError>> = episodes
            .par_iter()
            .enumerate()
            .map(|(i, ep)| {
                let scene = scenes.iter().find(|s| s.id == ep.scene_id).ok_or_else(|| {
                    RunError::UnknownScene {
                        episode: ep.id.clone(),
                        scene: ep.scene_id.clone(),
                    }
                })?;
                let seed = seed::child(manifest.seed, "agent", i as u64);
                run_episode(scene, ep, agent, &manifest.config, &manifest.planner, seed)
            })
            .collect();
        let mut records = Vec::new();
        for (ep, run) in episodes.iter().zip(runs) {
            match run {
                Ok(run) => {
                    write_log(&out.join(agent.name()).join(format!("{}.jsonl", ep.id)), &run.log)?;
                    log::info!(
                        "{} {}: {} steps, {} collisions, {:.2} m from goal",
                        agent,
                        ep.id,
                        run.summary.steps,
                        run.summary.collisions,
                        run.summary.final_distance
                    );
                    records.push(run.record);
                    summaries.push(run.summary);
                }
                Err(e) if continue_on_error => errors.push(format!("{agent}: {e}")),
                Err(e) => return Err(e),
            }
        }
        if records.is_empty() {
            continue;
        }
        let report = compute_metrics(&records)?;
        let dir = out.join(agent.name());
        write_json(&dir.join("report.json"), &report)?;
        write_file(
            &dir.join("report.txt"),
            report.to_text(&manifest.split, agent.name()).as_bytes(),
        )?;
        reports.push((manifest.split.clone(), agent.name().to_string(), report));
    }
    if !reports.is_empty() {
        let table = aggregate_report(&reports)?;
        write_json(&out.join("comparison.json"), &table)?;
        write_file(&out.join("comparison.txt"), table.to_text().as_bytes())?;
    }
    let mut lines = Vec::new();
    for s in &summaries {
        serde_json::to_writer(&mut lines, s).expect("summaries serialize");
        lines.push(b'\n');
    }
    write_file(&out.join("summary.jsonl"), &lines)?;
    if !errors.is_empty() {
        write_file(&out.join("errors.txt"), (errors.join("\n") + "\n").as_bytes())?;
    }
    Ok(BatchOutcome {
        reports,
        summaries,
        errors,
    })
}

/// Scores a directory of `<episode id>.jsonl` logs against their episodes.
pub fn evaluate_logs(dir: &Path, episodes: &[EpisodeSpec]) -> Result<EvalReport, RunError> {
    let mut records = Vec::new();
    for ep in episodes {
        let path = dir.join(format!("{}.jsonl", ep.id));
        let f = fs::File::open(&path).map_err(io_err(&path))?;
        let rec = record_from_log(BufReader::new(f), ep).map_err(|e| RunError::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(compute_metrics(&records)?)
}
