//! Deterministic 2D predator-prey coevolution arena.
//!
//! Three differential-drive predators with a forward camera and a single
//! front IR sensor chase one omniscient prey inside a square arena. Every
//! controller is a feed-forward NEAT network; the four populations evolve
//! in turn against Hall-of-Fame opponents, and finished runs are scored by
//! master tournaments or by live play against a human.

pub mod arena;
pub mod coevo;
pub mod config;
pub mod controller;
pub mod episode;
mod error;
pub mod live;
pub mod neat;
pub mod run;
pub mod seed;
pub mod sensors;
pub mod tournament;
pub mod trajectory;

pub use crate::arena::{ArenaConfig, Pose, RobotState, WheelCommand, WorldState};
pub use crate::controller::Controller;
pub use crate::episode::{run_episode, EpisodeOutcome};
pub use crate::error::{Error, Result};
pub use crate::neat::{Genome, NeatConfig};
pub use crate::sensors::CameraModel;
