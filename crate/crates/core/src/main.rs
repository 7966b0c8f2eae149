use std::collections::HashSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use havln::agents::AgentKind;
use havln::annotation::{build_camera_rig, extract_context, refine_placement, CameraRig, ContextEntry, CONTEXT_RADIUS};
use havln::planner::{EpisodeSpec, Planner, PlannerConfig};
use havln::runner::{
    evaluate_logs, load_episodes, load_scene_file, run_batch, run_episode, write_file, write_json, write_log,
    RunManifest,
};
use havln::scene::{load_scene, validate_scene, Scene};
use havln::sim::{CollisionMode, Mode, SimConfig};
use havln::synth::{gen_episodes, gen_scene, SceneParams};
use havln::{seed, Vec3};

#[derive(Parser)]
#[command(name = "havln", version, about = "Human-aware navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    De,
    Ce,
}

#[derive(Clone, Copy, ValueEnum)]
enum CollisionArg {
    Endpoint,
    Substep,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long, value_enum)]
    collision_mode: Option<CollisionArg>,
    #[arg(long)]
    max_steps: Option<usize>,
}

impl SimArgs {
    fn apply(&self, mut cfg: SimConfig) -> SimConfig {
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::De => Mode::Discrete,
                ModeArg::Ce => Mode::Continuous,
            };
        }
        if let Some(s) = self.step_size {
            cfg.step_size = s;
            cfg.substep_length = cfg.substep_length.min(s);
        }
        if let Some(c) = self.collision_mode {
            cfg.collision_mode = match c {
                CollisionArg::Endpoint => CollisionMode::Endpoint,
                CollisionArg::Substep => CollisionMode::Substep,
            };
        }
        if let Some(n) = self.max_steps {
            cfg.max_steps = n;
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene document.
    GenScene {
        #[arg(long, default_value_t = 160)]
        width: usize,
        #[arg(long, default_value_t = 120)]
        height: usize,
        #[arg(long, default_value_t = 4)]
        rooms: usize,
        #[arg(long, default_value_t = 1.2)]
        corridor_width: f64,
        #[arg(long, default_value_t = 8)]
        objects: usize,
        #[arg(long, default_value_t = 4)]
        humans: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample annotated episodes for a scene.
    GenEpisodes {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine human placements and report camera rigs and nearby objects.
    Annotate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        max_nudge: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill in ground-truth paths, influence labels and unavoidable encounters.
    Oracle {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        episodes: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one agent over a set of episodes.
    Run {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long, default_value = "oracle")]
        agent: AgentKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        continue_on_error: bool,
    },
    /// Run a manifest of scenes, episodes and agents, then evaluate.
    RunBatch {
        manifest: PathBuf,
        #[arg(long)]
        continue_on_error: bool,
    },
    /// Score a directory of trajectory logs.
    Eval {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary of a scene or episode document.
    Inspect { path: PathBuf },
}

#[derive(Serialize)]
struct HumanAnnotation {
    human_id: String,
    refined_position: Option<Vec3>,
    error: Option<String>,
    cameras: CameraRig,
    context: Vec<ContextEntry>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HAVLN_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn read_scene(path: &Path) -> Result<Scene> {
    Ok(load_scene_file(path)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenScene {
            width,
            height,
            rooms,
            corridor_width,
            objects,
            humans,
            seed,
            out,
        } => {
            let scene = gen_scene(&SceneParams {
                width,
                height,
                cell_size: 0.1,
                room_count: rooms,
                corridor_width,
                object_count: objects,
                human_count: humans,
                seed,
            })?;
            write_file(&out, (scene.to_json_pretty() + "\n").as_bytes())?;
        }
        Command::GenEpisodes {
            scene,
            count,
            seed,
            sim,
            out,
        } => {
            let scene = read_scene(&scene)?;
            let cfg = sim.apply(SimConfig::default());
            let eps = gen_episodes(&scene, count, seed, &cfg, &PlannerConfig::default())?;
            write_json(&out, &eps)?;
        }
        Command::Annotate { scene, max_nudge, out } => {
            let scene = read_scene(&scene)?;
            let notes: Vec<HumanAnnotation> = scene
                .humans
                .iter()
                .map(|h| {
                    let refined = refine_placement(&scene, h, max_nudge);
                    let base = refined.as_ref().map_or(h.base_position, |p| *p);
                    HumanAnnotation {
                        human_id: h.id.clone(),
                        refined_position: refined.as_ref().ok().copied(),
                        error: refined.err().map(|e| e.to_string()),
                        cameras: build_camera_rig(base, 1.0, 0.75),
                        context: extract_context(&scene, h, CONTEXT_RADIUS),
                    }
                })
                .collect();
            write_json(&out, &notes)?;
        }
        Command::Oracle {
            scene,
            episodes,
            sim,
            out,
        } => {
            let scene = read_scene(&scene)?;
            let cfg = sim.apply(SimConfig::default());
            let planner = Planner::new(&scene, &cfg, &PlannerConfig::default());
            let eps: Vec<EpisodeSpec> = load_episodes(&episodes)?
                .iter()
                .map(|e| planner.annotate(e))
                .collect();
            write_json(&out, &eps)?;
        }
        Command::Run {
            scene,
            episodes,
            agent,
            seed: root,
            sim,
            out,
            continue_on_error,
        } => {
            let scene = read_scene(&scene)?;
            let cfg = sim.apply(SimConfig::default());
            let eps = load_episodes(&episodes)?;
            let mut failures = 0;
            for (i, ep) in eps.iter().enumerate() {
                let s = seed::child(root, "agent", i as u64);
                match run_episode(&scene, ep, agent, &cfg, &PlannerConfig::default(), s) {
                    Ok(r) => {
                        write_log(&out.join(format!("{}.jsonl", ep.id)), &r.log)?;
                        println!("{}", serde_json::to_string(&r.summary)?);
                    }
                    Err(e) if continue_on_error => {
                        failures += 1;
                        eprintln!("error: {e}");
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if failures > 0 {
                bail!("{failures} episode(s) failed");
            }
        }
        Command::RunBatch {
            manifest,
            continue_on_error,
        } => {
            let m = RunManifest::load(&manifest)?;
            let outcome = run_batch(&m, continue_on_error)?;
            for (_, agent, r) in &outcome.reports {
                println!(
                    "{agent}: L={} TCR={:.3} CR={:.3} NE={:.2} SR={:.3}",
                    r.l, r.tcr, r.cr, r.ne, r.sr_full
                );
            }
            for e in &outcome.errors {
                eprintln!("error: {e}");
            }
            if !outcome.errors.is_empty() {
                bail!("{} error(s) during the batch", outcome.errors.len());
            }
        }
        Command::Eval { logs, episodes, out } => {
            let eps = load_episodes(&episodes)?;
            let report = evaluate_logs(&logs, &eps)?;
            print!("{}", report.to_text("eval", "-"));
            if let Some(out) = out {
                write_json(&out, &report)?;
            }
        }
        Command::Inspect { path } => inspect(&path)?,
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = if text.trim_start().starts_with(['{', '[']) {
        serde_json::from_str(&text).unwrap_or(serde_json::Value::Null)
    } else {
        serde_json::Value::Null
    };
    if value.get("grid").is_some() {
        let scene = load_scene(BufReader::new(text.as_bytes()))?;
        let g = &scene.grid;
        println!("scene {}", scene.id);
        println!(
            "  grid {}x{} cells of {} m, {} free",
            g.width(),
            g.height(),
            g.cell_size(),
            g.free_count()
        );
        println!(
            "  {} regions, {} objects, {} humans, {} viewpoints, {} edges",
            scene.regions.len(),
            scene.objects.len(),
            scene.humans.len(),
            scene.nav_graph.nodes.len(),
            scene.nav_graph.edges.len()
        );
        for h in &scene.humans {
            println!(
                "  {} in {}: {} frames, displacement {:.2} m, {}",
                h.id,
                h.region_id,
                h.frame_count(),
                h.motion.displacement(),
                h.motion.description
            );
        }
        let violations = validate_scene(&scene);
        println!("  {} validation findings", violations.len());
        return Ok(());
    }
    let eps = load_episodes(path)?;
    let scenes: HashSet<&str> = eps.iter().map(|e| e.scene_id.as_str()).collect();
    println!("{} episodes over {} scene(s)", eps.len(), scenes.len());
    for e in &eps {
        let gt = e
            .gt_path
            .as_ref()
            .map_or("no path".to_string(), |p| format!("{:.2} m, {} replans", p.length, p.replans));
        println!(
            "  {}: {}, influence {:?}, unavoidable {}",
            e.id, gt, e.human_influence, e.unavoidable_encounters
        );
    }
    Ok(())
}
