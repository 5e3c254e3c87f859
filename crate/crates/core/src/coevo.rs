//! Alternating coevolution of three heterogeneous predators and one prey.
//!
//! Each round the four roles evolve in turn (prey, predator 0, 1, 2). The
//! evolving individual plays with the previous generation's best teammates
//! and against opponents drawn from the Hall of Fame over a sliding window
//! of earlier generations.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arena::ArenaConfig;
use crate::config::RunConfig;
use crate::controller::{PREDATOR_ARITY, PREY_ARITY};
use crate::episode::{run_episode, EpisodeOutcome};
use crate::error::{Error, Result};
use crate::neat::{Genome, InnovationRegistry, Population};
use crate::seed::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Prey,
    Predator(usize),
}

impl Role {
    /// Evolution order within a round.
    pub const CYCLE: [Role; 4] = [Role::Prey, Role::Predator(0), Role::Predator(1), Role::Predator(2)];

    pub fn index(self) -> usize {
        match self {
            Role::Prey => 0,
            Role::Predator(i) => i + 1,
        }
    }

    pub fn from_index(i: usize) -> Role {
        Role::CYCLE[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Prey => "prey",
            Role::Predator(0) => "predator0",
            Role::Predator(1) => "predator1",
            Role::Predator(2) => "predator2",
            Role::Predator(_) => "predator?",
        }
    }

    pub fn parse(name: &str) -> Option<Role> {
        Role::CYCLE.into_iter().find(|r| r.name() == name)
    }

    pub fn arity(self) -> (usize, usize) {
        match self {
            Role::Prey => PREY_ARITY,
            Role::Predator(_) => PREDATOR_ARITY,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Role::parse(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown role {name:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoevoConfig {
    /// Episodes per individual evaluation (K).
    pub evaluations: usize,
    /// How many earlier generations the Hall of Fame samples from.
    pub hof_window: usize,
}

impl Default for CoevoConfig {
    fn default() -> Self {
        CoevoConfig {
            evaluations: 5,
            hof_window: 10,
        }
    }
}

impl CoevoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.evaluations == 0 {
            return Err(Error::Config("coevo.evaluations must be >= 1".into()));
        }
        if self.hof_window == 0 {
            return Err(Error::Config("coevo.hof_window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean survival time as a fraction of the episode length.
pub fn prey_fitness(catch_times: &[f64], episode_time: f64) -> Result<f64> {
    if catch_times.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let k = catch_times.len() as f64;
    Ok(catch_times.iter().map(|t| t / episode_time).sum::<f64>() / k)
}

/// Mean inverse final distance of the evolving predator. Distances are
/// floored at the catch radius so a catch earns the maximum term.
pub fn predator_fitness(final_distances: &[f64], catch_radius: f64) -> Result<f64> {
    if final_distances.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let k = final_distances.len() as f64;
    Ok(final_distances.iter().map(|d| 1.0 / d.max(catch_radius)).sum::<f64>() / k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessAggregate {
    pub outcomes: Vec<EpisodeOutcome>,
    pub fitness: f64,
}

impl FitnessAggregate {
    pub fn from_outcomes(outcomes: Vec<EpisodeOutcome>, role: Role, arena: &ArenaConfig) -> Result<Self> {
        let fitness = match role {
            Role::Prey => {
                let times: Vec<f64> = outcomes.iter().map(|o| o.t).collect();
                prey_fitness(&times, arena.episode_time)?
            }
            Role::Predator(i) => {
                let dists: Vec<f64> = outcomes.iter().map(|o| o.final_distances[i]).collect();
                predator_fitness(&dists, arena.catch_radius)?
            }
        };
        Ok(FitnessAggregate { outcomes, fitness })
    }
}

/// Best genome of every completed generation, per role. Entries are never
/// rewritten.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HallOfFame {
    entries: [Vec<Genome>; 4],
}

impl HallOfFame {
    pub fn len(&self, role: Role) -> usize {
        self.entries[role.index()].len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(Vec::is_empty)
    }

    pub fn get(&self, role: Role, generation: usize) -> Option<&Genome> {
        self.entries[role.index()].get(generation)
    }

    pub fn push(&mut self, role: Role, generation: usize, genome: Genome) -> Result<()> {
        let list = &mut self.entries[role.index()];
        if list.len() != generation {
            return Err(Error::Generation(format!(
                "hall of fame for {role} holds {} entries, cannot append generation {generation}",
                list.len()
            )));
        }
        list.push(genome);
        Ok(())
    }

    /// Generations that have an entry for every role.
    pub fn complete_generations(&self) -> usize {
        self.entries.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// Opponents for one episode and the generation they were drawn from
/// (`None` for the initial random pool).
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentDraw<'a> {
    pub generation: Option<usize>,
    pub genomes: Vec<&'a Genome>,
}

/// Draws opponents for `role` from the last `min(window, current_generation)`
/// completed generations. An evolving prey gets the whole predator trio of
/// one generation; an evolving predator gets that generation's prey.
pub fn sample_opponents<'a, R: Rng + ?Sized>(
    hof: &'a HallOfFame,
    initial_pool: &'a [Vec<Genome>; 4],
    role: Role,
    current_generation: usize,
    window: usize,
    rng: &mut R,
) -> OpponentDraw<'a> {
    let opposing: Vec<Role> = match role {
        Role::Prey => vec![Role::Predator(0), Role::Predator(1), Role::Predator(2)],
        Role::Predator(_) => vec![Role::Prey],
    };
    let span = window.min(current_generation);
    if span == 0 {
        let genomes = opposing
            .iter()
            .map(|r| {
                let pool = &initial_pool[r.index()];
                &pool[rng.random_range(0..pool.len())]
            })
            .collect();
        return OpponentDraw { generation: None, genomes };
    }
    let generation = current_generation - span + rng.random_range(0..span);
    let genomes = opposing
        .iter()
        .map(|&r| hof.get(r, generation).expect("completed generations have entries"))
        .collect();
    OpponentDraw {
        generation: Some(generation),
        genomes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub role: Role,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub generation: usize,
    pub role: Role,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub records: Vec<GenerationRecord>,
    pub timings: Vec<TimingRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoevoState {
    pub populations: [Population; 4],
    pub registries: [InnovationRegistry; 4],
    /// Generation-0 genomes; the opponent and teammate source before any
    /// generation has completed.
    pub initial_pool: [Vec<Genome>; 4],
    pub hall_of_fame: HallOfFame,
    pub generation: usize,
    /// Index into [`Role::CYCLE`] of the role evolving next.
    pub role_cursor: usize,
    pub master_seed: u64,
}

impl CoevoState {
    pub fn new(config: &RunConfig) -> Self {
        let seed = config.run.seed;
        let mut registries = Role::CYCLE.map(|r| {
            let (i, o) = r.arity();
            InnovationRegistry::new(i, o)
        });
        let populations = std::array::from_fn(|k| {
            let role = Role::from_index(k);
            let (i, o) = role.arity();
            let mut rng = seed::derive_rng(seed, &[tag::INITIAL, k as u64]);
            Population::new(&config.neat, i, o, &mut registries[k], &mut rng)
        });
        let initial_pool = std::array::from_fn(|k: usize| {
            let p: &Population = &populations[k];
            p.genomes.clone()
        });
        CoevoState {
            populations,
            registries,
            initial_pool,
            hall_of_fame: HallOfFame::default(),
            generation: 0,
            role_cursor: 0,
            master_seed: seed,
        }
    }

    pub fn role(&self) -> Role {
        Role::from_index(self.role_cursor)
    }

    /// Best genomes of the previous generation for the non-evolving
    /// predator slots, or seeded picks from the initial pool in generation 0.
    /// Entry `i` is `None` for the evolving slot.
    pub fn teammates(&self, role: Role) -> [Option<&Genome>; 3] {
        let Role::Predator(evolving) = role else {
            return [None, None, None];
        };
        let mut rng = seed::derive_rng(
            self.master_seed,
            &[tag::TEAMMATE, self.generation as u64, role.index() as u64],
        );
        std::array::from_fn(|j| {
            if j == evolving {
                return None;
            }
            let mate = Role::Predator(j);
            Some(match self.generation.checked_sub(1) {
                Some(prev) => self.hall_of_fame.get(mate, prev).expect("previous generation complete"),
                None => {
                    let pool = &self.initial_pool[mate.index()];
                    &pool[rng.random_range(0..pool.len())]
                }
            })
        })
    }

    /// Runs K episodes for one member of the evolving population.
    pub fn evaluate_individual(
        &self,
        individual: &Genome,
        individual_index: usize,
        role: Role,
        teammates: &[Option<&Genome>; 3],
        config: &RunConfig,
    ) -> Result<FitnessAggregate> {
        let k = config.coevo.evaluations;
        let coords = |stream: u64, episode: usize| {
            [
                stream,
                self.generation as u64,
                role.index() as u64,
                individual_index as u64,
                episode as u64,
            ]
        };
        let mut outcomes = Vec::with_capacity(k);
        for episode in 0..k {
            let mut rng = seed::derive_rng(self.master_seed, &coords(tag::OPPONENT, episode));
            let draw = sample_opponents(
                &self.hall_of_fame,
                &self.initial_pool,
                role,
                self.generation,
                config.coevo.hof_window,
                &mut rng,
            );
            let episode_seed = seed::derive(self.master_seed, &coords(tag::EPISODE, episode));
            let outcome = match role {
                Role::Prey => run_episode(
                    [draw.genomes[0], draw.genomes[1], draw.genomes[2]],
                    individual,
                    &config.arena,
                    &config.camera,
                    episode_seed,
                )?,
                Role::Predator(i) => {
                    let team: [&Genome; 3] =
                        std::array::from_fn(|j| if j == i { individual } else { teammates[j].expect("teammate") });
                    run_episode(team, draw.genomes[0], &config.arena, &config.camera, episode_seed)?
                }
            };
            outcomes.push(outcome);
        }
        FitnessAggregate::from_outcomes(outcomes, role, &config.arena)
    }

    /// Evaluates every member of `role`'s population. Members are independent
    /// and run in parallel; results keep population order.
    pub fn evaluate_population(&self, role: Role, config: &RunConfig) -> Result<Vec<f64>> {
        let teammates = self.teammates(role);
        self.populations[role.index()]
            .genomes
            .par_iter()
            .enumerate()
            .map(|(i, g)| {
                self.evaluate_individual(g, i, role, &teammates, config)
                    .map(|agg| agg.fitness)
            })
            .collect()
    }

    /// Evolves each role once in cycle order and advances the generation.
    pub fn evolve_round(&mut self, config: &RunConfig) -> Result<RoundReport> {
        let mut records = Vec::with_capacity(4);
        let mut timings = Vec::with_capacity(4);
        self.role_cursor = 0;
        for role in Role::CYCLE {
            let started = Instant::now();
            let fitnesses = self.evaluate_population(role, config)?;
            let k = role.index();
            let best = Population::ranked(&fitnesses)[0];
            self.hall_of_fame
                .push(role, self.generation, self.populations[k].genomes[best].clone())?;

            records.push(GenerationRecord {
                generation: self.generation,
                role,
                best_fitness: fitnesses[best],
                mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            });

            let mut rng = seed::derive_rng(
                self.master_seed,
                &[tag::REPRODUCE, self.generation as u64, k as u64],
            );
            self.populations[k].next_generation(&fitnesses, &config.neat, &mut self.registries[k], &mut rng)?;
            timings.push(TimingRecord {
                generation: self.generation,
                role,
                wall_time_ms: started.elapsed().as_millis(),
            });
            log::info!(
                "generation {} {}: best {:.4} mean {:.4}",
                self.generation,
                role,
                records.last().unwrap().best_fitness,
                records.last().unwrap().mean_fitness
            );
            self.role_cursor = (k + 1) % 4;
        }
        self.generation += 1;
        Ok(RoundReport { records, timings })
    }

    pub fn best_trio(&self, generation: usize) -> Option<[&Genome; 3]> {
        let h = &self.hall_of_fame;
        Some([
            h.get(Role::Predator(0), generation)?,
            h.get(Role::Predator(1), generation)?,
            h.get(Role::Predator(2), generation)?,
        ])
    }
}
