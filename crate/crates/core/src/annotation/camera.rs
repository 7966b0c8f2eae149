use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    /// Horizontal (left-right) rotation.
    pub theta_lr: f64,
    /// Downward tilt; `π/2` looks straight down.
    pub theta_ud: f64,
}

/// Nine inspection cameras around a placed human: eight in a ring, one
/// overhead. `cameras[i - 1]` is camera `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub cameras: [Camera; 9],
}

/// Ring camera `i` (1..=8) looks along `πi/8`. Odd cameras sit level with the
/// human; even cameras are raised by `delta_z` and tilted down by
/// `atan(delta_z / (√2 ε))`. Every ring camera stands `√2 ε` behind the human
/// along its own viewing direction, so the even tilt aims at the base
/// position. Camera 9 hangs `delta_z` overhead.
pub fn build_camera_rig(p_h: Vec3, epsilon: f64, delta_z: f64) -> CameraRig {
    let standoff = SQRT_2 * epsilon;
    let even_tilt = (delta_z / standoff).atan();
    let ring = |i: usize| {
        let theta_lr = PI * i as f64 / 8.0;
        let even = i.is_multiple_of(2);
        let back = Vec3::from_heading(theta_lr) * -standoff;
        let lift = if even { delta_z } else { 0.0 };
        Camera {
            position: p_h + back + Vec3::new(0.0, 0.0, lift),
            theta_lr,
            theta_ud: if even { even_tilt } else { 0.0 },
        }
    };
    let overhead = Camera {
        position: p_h + Vec3::new(0.0, 0.0, delta_z),
        theta_lr: 0.0,
        theta_ud: FRAC_PI_2,
    };
    CameraRig {
        cameras: [
            ring(1),
            ring(2),
            ring(3),
            ring(4),
            ring(5),
            ring(6),
            ring(7),
            ring(8),
            overhead,
        ],
    }
}
