use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::NeatConfig;
use super::genome::Genome;

/// Genomes smaller than this are compared without size normalization.
const SMALL_GENOME: usize = 20;

/// δ = c_excess·E/N + c_disjoint·D/N + c_weight·W̄ over connection genes.
pub fn compatibility_distance(a: &Genome, b: &Genome, config: &NeatConfig) -> f64 {
    let ga: BTreeMap<u32, f64> = a.connections.iter().map(|c| (c.innovation, c.weight)).collect();
    let gb: BTreeMap<u32, f64> = b.connections.iter().map(|c| (c.innovation, c.weight)).collect();

    let max_a = ga.keys().next_back().copied();
    let max_b = gb.keys().next_back().copied();
    let cutoff = match (max_a, max_b) {
        (Some(x), Some(y)) => x.min(y),
        _ => 0,
    };
    let either_empty = max_a.is_none() || max_b.is_none();

    let (mut excess, mut disjoint, mut matching, mut weight_diff) = (0usize, 0usize, 0usize, 0.0);
    for (id, wa) in &ga {
        match gb.get(id) {
            Some(wb) => {
                matching += 1;
                weight_diff += (wa - wb).abs();
            }
            None if either_empty || *id > cutoff => excess += 1,
            None => disjoint += 1,
        }
    }
    for id in gb.keys().filter(|id| !ga.contains_key(id)) {
        if either_empty || *id > cutoff {
            excess += 1;
        } else {
            disjoint += 1;
        }
    }

    let larger = ga.len().max(gb.len());
    let n = if ga.len() < SMALL_GENOME && gb.len() < SMALL_GENOME {
        1.0
    } else {
        larger as f64
    };
    let mean_weight = if matching > 0 {
        weight_diff / matching as f64
    } else {
        0.0
    };
    config.excess_coefficient * excess as f64 / n
        + config.disjoint_coefficient * disjoint as f64 / n
        + config.weight_coefficient * mean_weight
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: usize,
    pub representative: Genome,
    /// Indices into the population being speciated.
    pub members: Vec<usize>,
    pub best_fitness: f64,
    /// Generations since `best_fitness` last improved.
    pub staleness: usize,
}
