//! Human-aware vision-and-language navigation simulation engine.
//!
//! Scenes pair a static occupancy grid with humans replaying looped motion
//! sequences. Agents act in a six-action space shared by the discrete
//! (viewpoint graph) and continuous (metric step) settings; collisions with
//! people are detected by disc overlap and reverted. Ground-truth paths come
//! from A* with replanning, and episodes are scored with collision-aware
//! navigation metrics.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod annotation;
pub mod geometry;
pub mod metrics;
pub mod planner;
pub mod runner;
pub mod scene;
pub mod seed;
pub mod sim;
pub mod synth;

pub use geometry::{BBox, Cell, OccupancyGrid, Pose, Vec3};
pub use scene::{HumanModel, MotionSequence, NavGraph, Region, Scene, SceneObject};
