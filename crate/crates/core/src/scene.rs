//! Static world description: occupancy grid, regions, objects, humans with
//! their motion sequences, and the discrete viewpoint graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, OccupancyGrid, Pose, Vec3};

pub const DEFAULT_HUMAN_RADIUS: f64 = 0.3;
pub const DEFAULT_FRAME_COUNT: usize = 120;
/// Largest allowed jump between consecutive motion frames.
pub const MAX_FRAME_STEP: f64 = 0.5;
const EDGE_LENGTH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub label: String,
    pub bbox: BBox,
    #[serde(default)]
    pub object_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    pub position: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionFrame {
    pub translation: Vec3,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSequence {
    pub frames: Vec<MotionFrame>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub region_label: String,
}

fn default_radius() -> f64 {
    DEFAULT_HUMAN_RADIUS
}

impl MotionSequence {
    /// A single motionless frame.
    pub fn still(radius: f64) -> Self {
        MotionSequence {
            frames: vec![MotionFrame {
                translation: Vec3::ZERO,
                heading: 0.0,
            }],
            radius,
            description: "standing".into(),
            region_label: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Largest planar distance from the first frame reached during playback.
    pub fn displacement(&self) -> f64 {
        let Some(first) = self.frames.first() else {
            return 0.0;
        };
        self.frames
            .iter()
            .map(|f| first.translation.planar_distance(&f.translation))
            .fold(0.0, f64::max)
    }

    /// Whether the human moves between frame `t - 1` and `t` (wrapping).
    pub fn is_moving_at(&self, t: usize) -> bool {
        let n = self.frames.len();
        if n < 2 {
            return false;
        }
        let prev = &self.frames[(t + n - 1) % n].translation;
        let cur = &self.frames[t % n].translation;
        prev.distance(cur) > 1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanModel {
    pub id: String,
    pub motion: MotionSequence,
    pub base_position: Vec3,
    pub region_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("frame {frame} out of range for a {len}-frame motion")]
pub struct FrameOutOfRange {
    pub frame: usize,
    pub len: usize,
}

impl HumanModel {
    pub fn radius(&self) -> f64 {
        self.motion.radius
    }

    pub fn frame_count(&self) -> usize {
        self.motion.frames.len()
    }

    pub fn pose_at(&self, frame: usize) -> Result<Pose, FrameOutOfRange> {
        let f = self.motion.frames.get(frame).ok_or(FrameOutOfRange {
            frame,
            len: self.motion.frames.len(),
        })?;
        Ok(Pose::at(self.base_position + f.translation, f.heading))
    }

    /// Position during playback after `signals` processed refresh signals.
    pub fn position_after(&self, signals: u64) -> Vec3 {
        let n = self.motion.frames.len() as u64;
        self.base_position + self.motion.frames[(signals % n) as usize].translation
    }

    pub fn playback_positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.motion
            .frames
            .iter()
            .map(move |f| self.base_position + f.translation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavEdge {
    pub a: String,
    pub b: String,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NavGraph {
    pub nodes: BTreeMap<String, Vec3>,
    pub edges: Vec<NavEdge>,
}

impl NavGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<Vec3> {
        self.nodes.get(id).copied()
    }

    /// Adds an edge whose length is the Euclidean distance of its endpoints.
    pub fn connect(&mut self, a: &str, b: &str) {
        if a == b || self.has_edge(a, b) {
            return;
        }
        let (Some(pa), Some(pb)) = (self.position(a), self.position(b)) else {
            return;
        };
        self.edges.push(NavEdge {
            a: a.to_string(),
            b: b.to_string(),
            length: pa.distance(&pb),
        });
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges
            .iter()
            .any(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    pub fn neighbors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.edges.iter().filter_map(move |e| {
            if e.a == id {
                Some((e.b.as_str(), e.length))
            } else if e.b == id {
                Some((e.a.as_str(), e.length))
            } else {
                None
            }
        })
    }

    pub fn adjacency(&self) -> HashMap<&str, Vec<(&str, f64)>> {
        let mut adj: HashMap<&str, Vec<(&str, f64)>> = HashMap::new();
        for id in self.nodes.keys() {
            adj.entry(id.as_str()).or_default();
        }
        for e in &self.edges {
            adj.entry(e.a.as_str()).or_default().push((e.b.as_str(), e.length));
            adj.entry(e.b.as_str()).or_default().push((e.a.as_str(), e.length));
        }
        adj
    }

    /// Nearest node to `p` in the plane; ties broken by id.
    pub fn nearest(&self, p: &Vec3) -> Option<(&str, f64)> {
        self.nodes
            .iter()
            .map(|(id, q)| (id.as_str(), p.planar_distance(q)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub grid: OccupancyGrid,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub humans: Vec<HumanModel>,
    #[serde(default)]
    pub nav_graph: NavGraph,
}

impl Scene {
    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn human(&self, id: &str) -> Option<&HumanModel> {
        self.humans.iter().find(|h| h.id == id)
    }

    /// First region (in document order) whose footprint contains `p`.
    pub fn region_at(&self, p: &Vec3) -> Option<&Region> {
        self.regions.iter().find(|r| r.bbox.contains_planar(p))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene serialization is infallible")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization is infallible")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Reference,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub kind: ViolationKind,
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene document: {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{location}: unknown id `{id}`")]
    DanglingReference { location: String, id: String },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn load_scene(mut source: impl Read) -> Result<Scene, SceneError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let scene: Scene = serde_path_to_error::deserialize(de).map_err(|e| SceneError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let report = validate_scene(&scene);
    if let Some(v) = report.iter().find(|v| v.severity == Severity::Error) {
        return Err(match v.kind {
            ViolationKind::Reference => SceneError::DanglingReference {
                location: v.location.clone(),
                id: v.message.clone(),
            },
            ViolationKind::Invariant => SceneError::Invalid {
                location: v.location.clone(),
                message: v.message.clone(),
            },
        });
    }
    for v in report {
        log::warn!("scene {}: {v}", scene.id);
    }
    Ok(scene)
}

struct Report(Vec<Violation>);

impl Report {
    fn error(&mut self, location: String, message: impl Into<String>) {
        self.0.push(Violation {
            severity: Severity::Error,
            kind: ViolationKind::Invariant,
            location,
            message: message.into(),
        });
    }

    fn warning(&mut self, location: String, message: impl Into<String>) {
        self.0.push(Violation {
            severity: Severity::Warning,
            kind: ViolationKind::Invariant,
            location,
            message: message.into(),
        });
    }

    /// For reference violations the message is the missing id itself.
    fn dangling(&mut self, location: String, id: &str) {
        self.0.push(Violation {
            severity: Severity::Error,
            kind: ViolationKind::Reference,
            location,
            message: id.to_string(),
        });
    }
}

fn check_unique<'a>(report: &mut Report, what: &str, ids: impl Iterator<Item = &'a str>) {
    let mut seen = BTreeSet::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            report.error(format!("{what}[{i}].id"), format!("duplicate id `{id}`"));
        }
    }
}

/// Checks every scene invariant; an empty list means the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut r = Report(Vec::new());
    let grid = &scene.grid;

    check_unique(&mut r, "regions", scene.regions.iter().map(|x| x.id.as_str()));
    check_unique(&mut r, "objects", scene.objects.iter().map(|x| x.id.as_str()));
    check_unique(&mut r, "humans", scene.humans.iter().map(|x| x.id.as_str()));

    let object_ids: BTreeSet<&str> = scene.objects.iter().map(|o| o.id.as_str()).collect();

    for (i, region) in scene.regions.iter().enumerate() {
        if !region.bbox.is_well_formed() {
            r.error(format!("regions[{i}].bbox"), "bbox must satisfy lo <= hi");
        }
        for (k, oid) in region.object_ids.iter().enumerate() {
            if !object_ids.contains(oid.as_str()) {
                r.dangling(format!("regions[{i}].object_ids[{k}]"), oid);
            }
        }
    }

    for (i, obj) in scene.objects.iter().enumerate() {
        if !(obj.radius > 0.0 && obj.radius.is_finite()) {
            r.error(format!("objects[{i}].radius"), "radius must be positive");
        }
        if !obj.position.is_finite() {
            r.error(format!("objects[{i}].position"), "position must be finite");
            continue;
        }
        match grid.try_cell(&obj.position) {
            None => r.error(format!("objects[{i}].position"), "outside grid extent"),
            Some(c) if grid.is_blocked(c) => {
                r.warning(format!("objects[{i}].position"), "object sits on a blocked cell")
            }
            Some(_) => {}
        }
    }

    for (i, human) in scene.humans.iter().enumerate() {
        let loc = |f: &str| format!("humans[{i}].{f}");
        let motion = &human.motion;
        if motion.frames.is_empty() {
            r.error(loc("motion.frames"), "motion needs at least one frame");
        }
        if !(motion.radius > 0.0 && motion.radius.is_finite()) {
            r.error(loc("motion.radius"), "radius must be positive");
        }
        for (k, w) in motion.frames.windows(2).enumerate() {
            let step = w[0].translation.distance(&w[1].translation);
            if !(step < MAX_FRAME_STEP) {
                r.error(
                    format!("humans[{i}].motion.frames[{}]", k + 1),
                    format!("frame jump of {step} m breaks continuity"),
                );
            }
        }
        if !human.base_position.is_finite() {
            r.error(loc("base_position"), "position must be finite");
            continue;
        }
        match scene.region(&human.region_id) {
            None => r.dangling(loc("region_id"), &human.region_id),
            Some(region) => {
                if !region.bbox.contains(&human.base_position) {
                    r.error(
                        loc("base_position"),
                        format!("outside region `{}` bounds", region.id),
                    );
                }
            }
        }
        match grid.try_cell(&human.base_position) {
            None => r.error(loc("base_position"), "outside grid extent"),
            Some(c) if grid.is_blocked(c) => r.error(loc("base_position"), "on a blocked cell"),
            Some(_) => {}
        }
        if let Some(k) = human
            .playback_positions()
            .position(|p| !grid.contains_point(&p))
        {
            r.error(
                format!("humans[{i}].motion.frames[{k}]"),
                "playback leaves the grid extent",
            );
        }
    }

    let graph = &scene.nav_graph;
    for (id, p) in &graph.nodes {
        if !p.is_finite() {
            r.error(format!("nav_graph.nodes.{id}"), "position must be finite");
        }
    }
    for (i, e) in graph.edges.iter().enumerate() {
        let pa = graph.position(&e.a);
        let pb = graph.position(&e.b);
        if pa.is_none() {
            r.dangling(format!("nav_graph.edges[{i}].a"), &e.a);
        }
        if pb.is_none() {
            r.dangling(format!("nav_graph.edges[{i}].b"), &e.b);
        }
        if let (Some(pa), Some(pb)) = (pa, pb) {
            let d = pa.distance(&pb);
            if !((e.length - d).abs() <= EDGE_LENGTH_TOLERANCE) {
                r.error(
                    format!("nav_graph.edges[{i}].length"),
                    format!("length {} differs from endpoint distance {d}", e.length),
                );
            }
        }
    }
    for floor in disconnected_floors(graph) {
        r.error("nav_graph".into(), format!("graph on floor z={floor} is disconnected"));
    }

    r.0
}

/// Floors (nodes grouped by height rounded to cm) whose induced subgraph is
/// not connected.
fn disconnected_floors(graph: &NavGraph) -> Vec<f64> {
    let floor_key = |p: &Vec3| (p.z * 100.0).round() as i64;
    let mut floors: BTreeMap<i64, Vec<&str>> = BTreeMap::new();
    for (id, p) in &graph.nodes {
        floors.entry(floor_key(p)).or_default().push(id);
    }
    let adj = graph.adjacency();
    let mut bad = Vec::new();
    for (key, ids) in floors {
        let members: BTreeSet<&str> = ids.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([ids[0]]);
        seen.insert(ids[0]);
        while let Some(n) = queue.pop_front() {
            for &(m, _) in adj.get(n).into_iter().flatten() {
                if members.contains(m) && seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        if seen.len() != members.len() {
            bad.push(key as f64 / 100.0);
        }
    }
    bad
}
