//! One evaluation: sense, act and step until a catch or the time limit.

use serde::{Deserialize, Serialize};

use crate::arena::{advance, initial_placement, ArenaConfig, Pose, WheelCommand, WorldState};
use crate::controller::{Controller, PREDATOR_ARITY, PREY_ARITY};
use crate::error::{Error, Result};
use crate::neat::{Genome, Network};
use crate::sensors::{omniscient_observe, predator_observe, CameraModel};

/// Poses of one tick: prey first, then predators 0..2.
pub type Frame = [Pose; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub caught: bool,
    /// Index of the predator that made the catch.
    pub catcher: Option<usize>,
    /// Catch time in seconds, or the episode length when not caught.
    pub t: f64,
    /// Predator-to-prey center distances at the end of the episode.
    pub final_distances: [f64; 3],
    /// One frame per tick including the initial placement.
    pub trajectory: Vec<Frame>,
}

impl EpisodeOutcome {
    pub fn ticks(&self) -> usize {
        self.trajectory.len() - 1
    }
}

pub(crate) fn frame_of(state: &WorldState) -> Frame {
    [
        state.prey.pose,
        state.predators[0].pose,
        state.predators[1].pose,
        state.predators[2].pose,
    ]
}

fn check_arity(role: &str, actual: (usize, usize), expected: (usize, usize)) -> Result<()> {
    if actual != expected {
        return Err(Error::Arity { role: role.to_string(), expected, actual });
    }
    Ok(())
}

/// Wheel commands every controller picks from the same pre-step state.
pub fn decide(
    state: &WorldState,
    predators: [&dyn Controller; 3],
    prey: &dyn Controller,
    arena: &ArenaConfig,
    camera: &CameraModel,
) -> ([WheelCommand; 3], WheelCommand) {
    let predator_cmds = std::array::from_fn(|i| {
        let obs = predator_observe(state, i, camera, arena).to_inputs();
        let [l, r] = predators[i].act(&obs);
        WheelCommand::from_unit(l, r, arena.omega_max)
    });
    let obs = omniscient_observe(state, arena).to_inputs();
    let [l, r] = prey.act(&obs);
    (predator_cmds, WheelCommand::from_unit(l, r, arena.omega_max))
}

/// Plays one episode from the seeded initial placement. Pure in
/// (controllers, configs, seed).
pub fn run_controllers(
    predators: [&dyn Controller; 3],
    prey: &dyn Controller,
    arena: &ArenaConfig,
    camera: &CameraModel,
    seed: u64,
) -> Result<EpisodeOutcome> {
    for (i, p) in predators.iter().enumerate() {
        check_arity(&format!("predator {i}"), p.arity(), PREDATOR_ARITY)?;
    }
    check_arity("prey", prey.arity(), PREY_ARITY)?;

    let mut state = initial_placement(arena, seed);
    let mut trajectory = Vec::with_capacity(arena.max_ticks() as usize + 1);
    trajectory.push(frame_of(&state));
    let mut catcher = None;

    for _ in 0..arena.max_ticks() {
        let (predator_cmds, prey_cmd) = decide(&state, predators, prey, arena, camera);
        state = advance(&state, predator_cmds, prey_cmd, arena);
        trajectory.push(frame_of(&state));
        if state.caught {
            catcher = crate::arena::check_catch(&state, arena);
            break;
        }
    }

    Ok(EpisodeOutcome {
        caught: state.caught,
        catcher,
        t: state.catch_time.unwrap_or(arena.episode_time),
        final_distances: state.predator_distances(),
        trajectory,
    })
}

/// [`run_controllers`] for NEAT genomes.
pub fn run_episode(
    predators: [&Genome; 3],
    prey: &Genome,
    arena: &ArenaConfig,
    camera: &CameraModel,
    seed: u64,
) -> Result<EpisodeOutcome> {
    for (i, g) in predators.iter().enumerate() {
        check_arity(&format!("predator {i}"), g.arity(), PREDATOR_ARITY)?;
    }
    check_arity("prey", prey.arity(), PREY_ARITY)?;
    let nets: [Network; 3] = predators.map(Genome::compile);
    let prey_net = prey.compile();
    run_controllers([&nets[0], &nets[1], &nets[2]], &prey_net, arena, camera, seed)
}
