//! Fixed-timestep world: differential-drive kinematics, wall and body
//! contacts, catch detection.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Turn rates below this are integrated as straight-line motion.
const STRAIGHT_EPS: f64 = 1e-9;
/// Pairwise pushes against a wall halve the residual overlap each pass.
const MAX_PUSH_PASSES: usize = 64;

/// Wraps an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// World-frame direction from this pose's center to `other`'s center.
    pub fn bearing_to(&self, other: &Pose) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Wheel angular velocities in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelCommand {
    pub omega_left: f64,
    pub omega_right: f64,
}

impl WheelCommand {
    pub const STOP: WheelCommand = WheelCommand {
        omega_left: 0.0,
        omega_right: 0.0,
    };

    pub fn new(omega_left: f64, omega_right: f64) -> Self {
        WheelCommand {
            omega_left,
            omega_right,
        }
    }

    /// Scales network outputs in [-1, 1] to wheel speeds, saturating at
    /// `omega_max`.
    pub fn from_unit(left: f64, right: f64, omega_max: f64) -> Self {
        WheelCommand {
            omega_left: left.clamp(-1.0, 1.0) * omega_max,
            omega_right: right.clamp(-1.0, 1.0) * omega_max,
        }
    }

    pub fn within(&self, omega_max: f64) -> bool {
        self.omega_left.abs() <= omega_max && self.omega_right.abs() <= omega_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArenaConfig {
    pub side_length: f64,
    pub robot_body_radius: f64,
    pub wheel_radius: f64,
    pub axle_length: f64,
    pub omega_max: f64,
    pub dt: f64,
    pub episode_time: f64,
    pub catch_radius: f64,
    /// Reach of the front IR sensor, measured from the body edge.
    pub ir_range: f64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            side_length: 4.0,
            robot_body_radius: 0.10,
            wheel_radius: 0.035,
            axle_length: 0.18,
            omega_max: 15.0,
            dt: 0.1,
            episode_time: 30.0,
            catch_radius: 0.30,
            ir_range: 0.20,
        }
    }
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("side_length", self.side_length),
            ("robot_body_radius", self.robot_body_radius),
            ("wheel_radius", self.wheel_radius),
            ("axle_length", self.axle_length),
            ("omega_max", self.omega_max),
            ("dt", self.dt),
            ("episode_time", self.episode_time),
            ("catch_radius", self.catch_radius),
            ("ir_range", self.ir_range),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("arena.{name} must be > 0, got {value}")));
            }
        }
        let ratio = self.episode_time / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "arena.episode_time ({}) must be an integer multiple of dt ({})",
                self.episode_time, self.dt
            )));
        }
        if 2.0 * self.robot_body_radius >= self.side_length {
            return Err(Error::Config("robots do not fit in the arena".into()));
        }
        Ok(())
    }

    /// Number of control ticks in a full-length episode.
    pub fn max_ticks(&self) -> u32 {
        (self.episode_time / self.dt).round() as u32
    }

    pub fn time_at(&self, tick: u32) -> f64 {
        if tick >= self.max_ticks() {
            self.episode_time
        } else {
            f64::from(tick) * self.dt
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.omega_max * self.wheel_radius
    }

    pub fn center(&self) -> (f64, f64) {
        (self.side_length / 2.0, self.side_length / 2.0)
    }

    /// True when the whole body disc centred at (x, y) lies inside the walls.
    pub fn contains_body(&self, x: f64, y: f64, tolerance: f64) -> bool {
        let lo = self.robot_body_radius - tolerance;
        let hi = self.side_length - self.robot_body_radius + tolerance;
        (lo..=hi).contains(&x) && (lo..=hi).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    pub command: WheelCommand,
}

impl RobotState {
    pub fn at(pose: Pose) -> Self {
        RobotState {
            pose,
            command: WheelCommand::STOP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u32,
    pub predators: [RobotState; 3],
    pub prey: RobotState,
    pub caught: bool,
    pub catch_time: Option<f64>,
}

impl WorldState {
    pub fn from_poses(predators: [Pose; 3], prey: Pose) -> Self {
        WorldState {
            tick: 0,
            predators: predators.map(RobotState::at),
            prey: RobotState::at(prey),
            caught: false,
            catch_time: None,
        }
    }

    /// All four poses, predators first then the prey.
    pub fn poses(&self) -> [Pose; 4] {
        [
            self.predators[0].pose,
            self.predators[1].pose,
            self.predators[2].pose,
            self.prey.pose,
        ]
    }

    fn set_poses(&mut self, poses: [Pose; 4]) {
        for (robot, pose) in self.predators.iter_mut().zip(poses) {
            robot.pose = pose;
        }
        self.prey.pose = poses[3];
    }

    /// Center distance from each predator to the prey.
    pub fn predator_distances(&self) -> [f64; 3] {
        self.predators.map(|p| p.pose.distance_to(&self.prey.pose))
    }
}

/// Exact closed-form differential-drive update over one `dt`.
pub fn step_kinematics(pose: Pose, cmd: WheelCommand, config: &ArenaConfig) -> Pose {
    let r = config.wheel_radius;
    let v = r * (cmd.omega_left + cmd.omega_right) / 2.0;
    let omega = r * (cmd.omega_right - cmd.omega_left) / config.axle_length;
    let dt = config.dt;

    if omega.abs() < STRAIGHT_EPS {
        let (sin, cos) = pose.theta.sin_cos();
        return Pose::new(pose.x + v * dt * cos, pose.y + v * dt * sin, pose.theta);
    }

    let radius = v / omega;
    let theta_end = pose.theta + omega * dt;
    Pose::new(
        pose.x + radius * (theta_end.sin() - pose.theta.sin()),
        pose.y - radius * (theta_end.cos() - pose.theta.cos()),
        theta_end,
    )
}

fn clamp_to_walls(pose: &mut Pose, config: &ArenaConfig) {
    let lo = config.robot_body_radius;
    let hi = config.side_length - config.robot_body_radius;
    pose.x = pose.x.clamp(lo, hi);
    pose.y = pose.y.clamp(lo, hi);
}

/// Pushes robots apart along their center line and back inside the walls.
/// Headings are untouched.
pub fn resolve_poses(poses: &mut [Pose], config: &ArenaConfig) {
    for pose in poses.iter_mut() {
        clamp_to_walls(pose, config);
    }
    let min_sep = 2.0 * config.robot_body_radius;

    for _ in 0..MAX_PUSH_PASSES {
        let mut moved = false;
        for i in 0..poses.len() {
            for j in (i + 1)..poses.len() {
                if separate_pair(poses, i, j, min_sep, config) {
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
}

fn unit_between(a: &Pose, b: &Pose) -> (f64, f64, f64) {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let d = dx.hypot(dy);
    if d > 0.0 {
        (dx / d, dy / d, d)
    } else {
        // coincident centers: separate along +x
        (1.0, 0.0, 0.0)
    }
}

fn separate_pair(poses: &mut [Pose], i: usize, j: usize, min_sep: f64, config: &ArenaConfig) -> bool {
    let (nx, ny, d) = unit_between(&poses[i], &poses[j]);
    if d >= min_sep {
        return false;
    }
    let half = (min_sep - d) / 2.0;
    poses[i].x -= nx * half;
    poses[i].y -= ny * half;
    poses[j].x += nx * half;
    poses[j].y += ny * half;
    clamp_to_walls(&mut poses[i], config);
    clamp_to_walls(&mut poses[j], config);

    // A wall ate part of the push; hand the remainder to whichever robot can
    // still move.
    for (from, to) in [(i, j), (j, i)] {
        let (nx, ny, d) = unit_between(&poses[from], &poses[to]);
        if d >= min_sep {
            break;
        }
        let rest = min_sep - d;
        poses[to].x += nx * rest;
        poses[to].y += ny * rest;
        clamp_to_walls(&mut poses[to], config);
    }
    true
}

pub fn resolve_collisions(state: &WorldState, config: &ArenaConfig) -> WorldState {
    let mut poses = state.poses();
    resolve_poses(&mut poses, config);
    let mut out = state.clone();
    out.set_poses(poses);
    out
}

/// Index of the predator that has caught the prey, if any. Ties go to the
/// lowest index.
pub fn check_catch(state: &WorldState, config: &ArenaConfig) -> Option<usize> {
    state
        .predator_distances()
        .iter()
        .position(|&d| d <= config.catch_radius)
}

/// Predators in a row parallel to the y = 0 wall facing the arena, prey in
/// the center with a seeded heading.
pub fn initial_placement(config: &ArenaConfig, rng_seed: u64) -> WorldState {
    let side = config.side_length;
    let row_y = 0.3 * side / 4.0;
    let predators = [0.25, 0.5, 0.75].map(|f| Pose::new(f * side, row_y, FRAC_PI_2));

    let mut rng = seed::rng(rng_seed);
    // (-π, π]: negate a draw from [-π, π)
    let heading = -rng.random_range(-PI..PI);
    let (cx, cy) = config.center();
    WorldState::from_poses(predators, Pose::new(cx, cy, heading))
}

/// Advances the world by one control tick. All robots move simultaneously
/// from the same pre-step state.
pub fn advance(
    state: &WorldState,
    predator_cmds: [WheelCommand; 3],
    prey_cmd: WheelCommand,
    config: &ArenaConfig,
) -> WorldState {
    let mut next = state.clone();
    for (robot, cmd) in next.predators.iter_mut().zip(predator_cmds) {
        robot.command = cmd;
        robot.pose = step_kinematics(robot.pose, cmd, config);
    }
    next.prey.command = prey_cmd;
    next.prey.pose = step_kinematics(next.prey.pose, prey_cmd, config);

    let mut poses = next.poses();
    resolve_poses(&mut poses, config);
    next.set_poses(poses);
    next.tick = state.tick + 1;

    if check_catch(&next, config).is_some() {
        next.caught = true;
        next.catch_time = Some(config.time_at(next.tick));
    }
    next
}
