//! Placing human motions into scenes: swarm-based coarse placement, the
//! nine-camera inspection rig, automated fine refinement, and extraction of
//! nearby-object context.

mod camera;
mod context;
mod pso;
mod refine;

pub use camera::{build_camera_rig, Camera, CameraRig};
pub use context::{extract_context, ContextEntry, CONTEXT_RADIUS};
pub use pso::{
    constraint_violations, fitness, penalty, pso_place, ConstraintKind, ConstraintViolation,
    PlacementError, PlacementProblem, PsoParams, DEFAULT_EPSILON, DEFAULT_HEIGHT_OFFSET,
    DEFAULT_PROXIMITY,
};
pub use refine::{refine_placement, RefineError, NUDGE_STEP};
