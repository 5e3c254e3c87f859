//! Controller inputs: the predators' camera and front IR, and the prey's
//! ground-truth view of the world.

use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::arena::{normalize_angle, ArenaConfig, Pose, WorldState};
use crate::error::{Error, Result};

/// Geometric stand-in for the phone camera plus color blob detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraModel {
    /// Horizontal field of view, radians.
    pub fov: f64,
    /// Radius of the colored marker the camera looks for, meters.
    pub target_radius: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            fov: FRAC_PI_3,
            target_radius: 0.10,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 0.0 && self.fov < PI) {
            return Err(Error::Config(format!("camera.fov must be in (0, π), got {}", self.fov)));
        }
        if !(self.target_radius > 0.0 && self.target_radius.is_finite()) {
            return Err(Error::Config("camera.target_radius must be > 0".into()));
        }
        Ok(())
    }
}

/// `x_image` is negative left of the image center; `area` is -1 when the
/// prey is not in view. `ir` is +1 when the front IR sees an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredatorObservation {
    pub x_image: f64,
    pub area: f64,
    pub ir: f64,
}

impl PredatorObservation {
    pub fn to_inputs(self) -> [f64; 3] {
        [self.x_image, self.area, self.ir]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreyObservation {
    /// Relative bearing of each predator, divided by π.
    pub dtheta: [f64; 3],
    /// Distance to each predator, divided by the arena side.
    pub distance: [f64; 3],
    /// Prey position mapped to [-1, 1].
    pub x: f64,
    pub y: f64,
}

impl PreyObservation {
    pub fn to_inputs(self) -> [f64; 8] {
        [
            self.dtheta[0],
            self.dtheta[1],
            self.dtheta[2],
            self.distance[0],
            self.distance[1],
            self.distance[2],
            self.x,
            self.y,
        ]
    }
}

pub const NOT_VISIBLE: (f64, f64) = (0.0, -1.0);

/// Distance from `p` to the segment a-b, and whether the closest point is
/// strictly inside it.
fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> (f64, bool) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return ((p.0 - a.0).hypot(p.1 - a.1), false);
    }
    let t = ((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2;
    let t_clamped = t.clamp(0.0, 1.0);
    let cx = a.0 + t_clamped * dx;
    let cy = a.1 + t_clamped * dy;
    ((p.0 - cx).hypot(p.1 - cy), t > 0.0 && t < 1.0)
}

/// Camera reading of `target` from `observer`, with `occluders` blocking the
/// line of sight. Returns `(x_image, area)`.
pub fn camera_view<'a>(
    observer: &Pose,
    target: &Pose,
    occluders: impl IntoIterator<Item = &'a Pose>,
    camera: &CameraModel,
    body_radius: f64,
) -> (f64, f64) {
    let half_fov = camera.fov / 2.0;
    // counter-clockwise positive: prey on the observer's left has beta > 0
    let beta = normalize_angle(observer.bearing_to(target) - observer.theta);
    if beta.abs() > half_fov {
        return NOT_VISIBLE;
    }

    let a = (observer.x, observer.y);
    let b = (target.x, target.y);
    for occ in occluders {
        let (dist, interior) = segment_distance(a, b, (occ.x, occ.y));
        // A disc whose nearest point is an endpoint cannot cut the open
        // segment unless it covers that endpoint.
        let blocks = if interior {
            dist < body_radius
        } else {
            let ea = (occ.x - a.0).hypot(occ.y - a.1);
            let eb = (occ.x - b.0).hypot(occ.y - b.1);
            ea < body_radius || eb < body_radius
        };
        if blocks {
            return NOT_VISIBLE;
        }
    }

    let d = observer.distance_to(target);
    let width = 2.0 * (camera.target_radius / d.max(camera.target_radius)).atan();
    let area = (width / camera.fov).min(1.0);
    // image coordinates grow to the right
    (-beta / half_fov, area)
}

pub fn camera_observe(
    state: &WorldState,
    predator_index: usize,
    camera: &CameraModel,
    config: &ArenaConfig,
) -> (f64, f64) {
    let observer = &state.predators[predator_index].pose;
    let occluders = state
        .predators
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != predator_index)
        .map(|(_, r)| &r.pose);
    camera_view(
        observer,
        &state.prey.pose,
        occluders,
        camera,
        config.robot_body_radius,
    )
}

/// Distance along the heading from the body edge to the nearest wall.
fn wall_distance(edge: (f64, f64), dir: (f64, f64), side: f64) -> f64 {
    let mut best = f64::INFINITY;
    for (pos, d) in [(edge.0, dir.0), (edge.1, dir.1)] {
        if d > 0.0 {
            best = best.min((side - pos) / d);
        } else if d < 0.0 {
            best = best.min(-pos / d);
        }
    }
    best.max(0.0)
}

/// Smallest s >= 0 where `edge + s·dir` enters the disc, if any.
fn ray_disc(edge: (f64, f64), dir: (f64, f64), center: (f64, f64), radius: f64) -> Option<f64> {
    let (ox, oy) = (edge.0 - center.0, edge.1 - center.1);
    let c = ox * ox + oy * oy - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = ox * dir.0 + oy * dir.1;
    if b > 0.0 {
        return None;
    }
    let disc = b * b - c;
    // tangent rays count as hits
    if disc < -1e-12 {
        return None;
    }
    Some(-b - disc.max(0.0).sqrt())
}

/// +1 if the forward IR ray from the body edge hits a wall or another robot
/// within `ir_range`, else -1.
pub fn ir_reading<'a>(
    robot: &Pose,
    others: impl IntoIterator<Item = &'a Pose>,
    config: &ArenaConfig,
) -> f64 {
    const EPS: f64 = 1e-9;
    let dir = (robot.theta.cos(), robot.theta.sin());
    let r = config.robot_body_radius;
    let edge = (robot.x + r * dir.0, robot.y + r * dir.1);

    if wall_distance(edge, dir, config.side_length) <= config.ir_range + EPS {
        return 1.0;
    }
    let hit = others.into_iter().any(|o| {
        ray_disc(edge, dir, (o.x, o.y), r).is_some_and(|s| s <= config.ir_range + EPS)
    });
    if hit {
        1.0
    } else {
        -1.0
    }
}

pub fn ir_observe(state: &WorldState, predator_index: usize, config: &ArenaConfig) -> f64 {
    let poses = state.poses();
    let others = poses.iter().enumerate().filter(|&(i, _)| i != predator_index).map(|(_, p)| p);
    ir_reading(&state.predators[predator_index].pose, others, config)
}

pub fn predator_observe(
    state: &WorldState,
    predator_index: usize,
    camera: &CameraModel,
    config: &ArenaConfig,
) -> PredatorObservation {
    let (x_image, area) = camera_observe(state, predator_index, camera, config);
    PredatorObservation {
        x_image,
        area,
        ir: ir_observe(state, predator_index, config),
    }
}

pub fn omniscient_observe(state: &WorldState, config: &ArenaConfig) -> PreyObservation {
    let prey = state.prey.pose;
    let side = config.side_length;
    let mut dtheta = [0.0; 3];
    let mut distance = [0.0; 3];
    for (i, p) in state.predators.iter().enumerate() {
        dtheta[i] = normalize_angle(prey.bearing_to(&p.pose) - prey.theta) / PI;
        distance[i] = prey.distance_to(&p.pose) / side;
    }
    PreyObservation {
        dtheta,
        distance,
        x: 2.0 * prey.x / side - 1.0,
        y: 2.0 * prey.y / side - 1.0,
    }
}
