//! Live play: one human-controlled robot against evolved controllers.
//!
//! [`Session`] owns the world and knows nothing about sockets. A transport
//! feeds it [`ClientMessage`]s and calls [`Session::tick`] once per control
//! period, forwarding the returned [`ServerMessage`]s.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arena::{advance, initial_placement, ArenaConfig, Pose, WorldState};
use crate::coevo::Role;
use crate::controller::{Constant, Controller, PREDATOR_ARITY, PREY_ARITY};
use crate::episode::decide;
use crate::error::{Error, Result};
use crate::neat::{Genome, Network};
use crate::sensors::{predator_observe, CameraModel};

pub mod keys {
    pub const FORWARD: u8 = 1;
    pub const BACK: u8 = 2;
    pub const LEFT: u8 = 4;
    pub const RIGHT: u8 = 8;
    pub const ALL: u8 = FORWARD | BACK | LEFT | RIGHT;
}

/// Seconds before the clock starts on its own if no control arrives.
pub const COUNTDOWN: f64 = 3.0;

/// Wheel outputs in [-1, 1] for a key-state. Opposite keys cancel.
pub fn key_outputs(bits: u8) -> Result<[f64; 2]> {
    if bits & !keys::ALL != 0 {
        return Err(Error::Protocol(format!("unknown key bits {:#x}", bits & !keys::ALL)));
    }
    let held = |k: u8| bits & k != 0;
    let drive = i8::from(held(keys::FORWARD)) - i8::from(held(keys::BACK));
    let turn = i8::from(held(keys::LEFT)) - i8::from(held(keys::RIGHT));
    Ok(match (drive, turn) {
        (0, 0) => [0.0, 0.0],
        (1, 0) => [1.0, 1.0],
        (-1, 0) => [-0.6, -0.6],
        (0, 1) => [-0.5, 0.5],
        (0, -1) => [0.5, -0.5],
        (1, 1) => [0.25, 1.0],
        (1, -1) => [1.0, 0.25],
        (-1, 1) => [-0.15, -0.6],
        (-1, -1) => [-0.6, -0.15],
        _ => unreachable!(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseMsg {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl From<Pose> for PoseMsg {
    fn from(p: Pose) -> Self {
        PoseMsg { x: p.x, y: p.y, theta: p.theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationMsg {
    pub x_image: f64,
    pub area: f64,
    pub ir: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub role: Role,
    pub generation: usize,
    pub seed: u64,
    /// Catch time, or the episode length if the prey survived.
    pub time: f64,
    pub caught: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsGroup {
    pub role: Role,
    pub generation: usize,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Start {
        role: Role,
        seed: u64,
    },
    Control {
        trial_id: u64,
        keys: u8,
        #[serde(default)]
        client_time: f64,
    },
    Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Frame {
        trial_id: u64,
        tick: u32,
        time: f64,
        /// Prey first, then predators 0..2.
        poses: [PoseMsg; 4],
        observations: [ObservationMsg; 3],
        caught: bool,
    },
    TrialEnd(TrialRecord),
    Stats {
        groups: Vec<StatsGroup>,
    },
    Error {
        code: String,
        message: String,
    },
}

impl ServerMessage {
    pub fn error(e: &Error) -> Self {
        ServerMessage::Error {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Trial {
    id: u64,
    role: Role,
    seed: u64,
    state: WorldState,
    keys: u8,
    started: bool,
    countdown_ticks: u32,
}

pub struct Session {
    arena: ArenaConfig,
    camera: CameraModel,
    generation: usize,
    predators: [Network; 3],
    prey: Network,
    trial: Option<Trial>,
    records: Vec<TrialRecord>,
    next_trial_id: u64,
}

impl Session {
    pub fn new(
        arena: ArenaConfig,
        camera: CameraModel,
        generation: usize,
        predators: [&Genome; 3],
        prey: &Genome,
    ) -> Result<Self> {
        for (i, g) in predators.iter().enumerate() {
            if g.arity() != PREDATOR_ARITY {
                return Err(Error::Arity {
                    role: format!("predator {i}"),
                    expected: PREDATOR_ARITY,
                    actual: g.arity(),
                });
            }
        }
        if prey.arity() != PREY_ARITY {
            return Err(Error::Arity {
                role: "prey".into(),
                expected: PREY_ARITY,
                actual: prey.arity(),
            });
        }
        Ok(Session {
            arena,
            camera,
            generation,
            predators: predators.map(Genome::compile),
            prey: prey.compile(),
            trial: None,
            records: Vec::new(),
            next_trial_id: 1,
        })
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn trial_in_progress(&self) -> bool {
        self.trial.is_some()
    }

    /// Places the robots for a new trial and returns its id and first frame.
    pub fn start_trial(&mut self, role: Role, seed: u64) -> Result<(u64, ServerMessage)> {
        if self.trial.is_some() {
            return Err(Error::TrialInProgress);
        }
        let id = self.next_trial_id;
        self.next_trial_id += 1;
        let trial = Trial {
            id,
            role,
            seed,
            state: initial_placement(&self.arena, seed),
            keys: 0,
            started: false,
            countdown_ticks: (COUNTDOWN / self.arena.dt).round() as u32,
        };
        let frame = self.frame(&trial);
        self.trial = Some(trial);
        Ok((id, frame))
    }

    /// Latches a key-state for the next tick. Controls for another trial are
    /// ignored; returns whether the control was applied.
    pub fn control(&mut self, trial_id: u64, bits: u8) -> Result<bool> {
        key_outputs(bits)?;
        match &mut self.trial {
            Some(t) if t.id == trial_id => {
                t.keys = bits;
                t.started = true;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// Handles one client message, returning any immediate replies.
    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let result = match msg {
            ClientMessage::Start { role, seed } => self.start_trial(role, seed).map(|(_, f)| vec![f]),
            ClientMessage::Control { trial_id, keys, .. } => self.control(trial_id, keys).map(|_| vec![]),
            ClientMessage::Stats => self.trial_stats().map(|groups| vec![ServerMessage::Stats { groups }]),
        };
        result.unwrap_or_else(|e| vec![ServerMessage::error(&e)])
    }

    /// Advances the active trial by one control period. Returns nothing
    /// while idle or counting down, a frame otherwise, and the trial record
    /// after the final frame.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        let Some(trial) = self.trial.as_mut() else {
            return Vec::new();
        };
        if !trial.started {
            if trial.countdown_ticks > 0 {
                trial.countdown_ticks -= 1;
                return Vec::new();
            }
            trial.started = true;
        }

        let human = key_outputs(trial.keys).expect("keys validated on receipt");
        let human_pred = Constant { arity: PREDATOR_ARITY, output: human };
        let human_prey = Constant { arity: PREY_ARITY, output: human };
        let mut predators: [&dyn Controller; 3] =
            [&self.predators[0], &self.predators[1], &self.predators[2]];
        let mut prey: &dyn Controller = &self.prey;
        match trial.role {
            Role::Prey => prey = &human_prey,
            Role::Predator(i) => predators[i] = &human_pred,
        }
        let (pc, yc) = decide(&trial.state, predators, prey, &self.arena, &self.camera);
        trial.state = advance(&trial.state, pc, yc, &self.arena);

        let trial = self.trial.clone().expect("active");
        let mut out = vec![self.frame(&trial)];
        if trial.state.caught || trial.state.tick >= self.arena.max_ticks() {
            let record = TrialRecord {
                trial_id: trial.id,
                role: trial.role,
                generation: self.generation,
                seed: trial.seed,
                time: trial.state.catch_time.unwrap_or(self.arena.episode_time),
                caught: trial.state.caught,
            };
            self.records.push(record.clone());
            self.trial = None;
            out.push(ServerMessage::TrialEnd(record));
        }
        out
    }

    fn frame(&self, trial: &Trial) -> ServerMessage {
        let s = &trial.state;
        let observations = std::array::from_fn(|i| {
            let o = predator_observe(s, i, &self.camera, &self.arena);
            ObservationMsg { x_image: o.x_image, area: o.area, ir: o.ir }
        });
        let caught = s.caught;
        ServerMessage::Frame {
            trial_id: trial.id,
            tick: s.tick,
            time: self.arena.time_at(s.tick),
            poses: [
                s.prey.pose.into(),
                s.predators[0].pose.into(),
                s.predators[1].pose.into(),
                s.predators[2].pose.into(),
            ],
            observations,
            caught,
        }
    }

    pub fn trial_stats(&self) -> Result<Vec<StatsGroup>> {
        trial_stats(&self.records)
    }
}

/// Count, mean and population standard deviation of trial times per
/// (role, generation).
pub fn trial_stats(records: &[TrialRecord]) -> Result<Vec<StatsGroup>> {
    if records.is_empty() {
        return Err(Error::NoTrials);
    }
    let mut groups: BTreeMap<(Role, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.role, r.generation)).or_default().push(r.time);
    }
    Ok(groups
        .into_iter()
        .map(|((role, generation), times)| {
            let n = times.len() as f64;
            let mean = times.iter().sum::<f64>() / n;
            let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
            StatsGroup { role, generation, count: times.len(), mean, stddev: var.sqrt() }
        })
        .collect())
}
