//! Feed-forward NEAT: genomes with historical markings, tanh networks,
//! structural mutation, crossover, speciation and elitist turnover.

mod config;
mod crossover;
mod genome;
mod innovation;
mod mutation;
mod network;
mod population;
mod species;

pub use config::NeatConfig;
pub use crossover::crossover;
pub use genome::{ConnectionGene, Genome, NodeGene, NodeRole};
pub use innovation::InnovationRegistry;
pub use network::Network;
pub use population::{roulette, Population};
pub use species::{compatibility_distance, Species};
