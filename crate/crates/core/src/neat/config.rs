use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeatConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Per-connection chance that a weight is perturbed or replaced.
    pub weight_mutate_rate: f64,
    /// Per-node chance that a bias is perturbed or replaced.
    pub bias_mutate_rate: f64,
    pub add_connection_prob: f64,
    pub delete_connection_prob: f64,
    pub add_node_prob: f64,
    pub delete_node_prob: f64,
    pub elites: usize,
    pub excess_coefficient: f64,
    pub disjoint_coefficient: f64,
    pub weight_coefficient: f64,
    pub compatibility_threshold: f64,
    pub weight_perturb_stddev: f64,
    /// Chance that a mutated weight is redrawn instead of perturbed.
    pub weight_replace_prob: f64,
    pub weight_replace_range: f64,
    pub weight_clamp: f64,
    pub initial_weight_range: f64,
    /// Chance a gene disabled in one parent stays disabled in the child.
    pub disable_inherit_prob: f64,
    pub stagnation_limit: usize,
    /// Fraction of each species (best first) eligible as parents.
    pub survival_threshold: f64,
    /// Chance an offspring comes from crossover rather than a mutated clone.
    pub crossover_rate: f64,
    /// Species with at least this many members pass their champion on
    /// unchanged; 0 disables it.
    pub species_elite_min_size: usize,
}

impl Default for NeatConfig {
    fn default() -> Self {
        NeatConfig {
            population_size: 20,
            generations: 100,
            weight_mutate_rate: 0.8,
            bias_mutate_rate: 0.7,
            add_connection_prob: 0.1,
            delete_connection_prob: 0.1,
            add_node_prob: 0.1,
            delete_node_prob: 0.1,
            elites: 4,
            excess_coefficient: 1.0,
            disjoint_coefficient: 1.0,
            weight_coefficient: 0.4,
            compatibility_threshold: 3.0,
            weight_perturb_stddev: 0.5,
            weight_replace_prob: 0.1,
            weight_replace_range: 3.0,
            weight_clamp: 8.0,
            initial_weight_range: 1.0,
            disable_inherit_prob: 0.75,
            stagnation_limit: 15,
            survival_threshold: 1.0,
            crossover_rate: 1.0,
            species_elite_min_size: 0,
        }
    }
}

impl NeatConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("weight_mutate_rate", self.weight_mutate_rate),
            ("bias_mutate_rate", self.bias_mutate_rate),
            ("add_connection_prob", self.add_connection_prob),
            ("delete_connection_prob", self.delete_connection_prob),
            ("add_node_prob", self.add_node_prob),
            ("delete_node_prob", self.delete_node_prob),
            ("weight_replace_prob", self.weight_replace_prob),
            ("disable_inherit_prob", self.disable_inherit_prob),
            ("survival_threshold", self.survival_threshold),
            ("crossover_rate", self.crossover_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("neat.{name} must be in [0, 1], got {p}")));
            }
        }
        if self.survival_threshold <= 0.0 {
            return Err(Error::Config("neat.survival_threshold must be > 0".into()));
        }
        if self.population_size < 2 {
            return Err(Error::Config("neat.population_size must be >= 2".into()));
        }
        if self.elites >= self.population_size {
            return Err(Error::Config(format!(
                "neat.elites ({}) must be smaller than population_size ({})",
                self.elites, self.population_size
            )));
        }
        let non_negative = [
            ("excess_coefficient", self.excess_coefficient),
            ("disjoint_coefficient", self.disjoint_coefficient),
            ("weight_coefficient", self.weight_coefficient),
            ("compatibility_threshold", self.compatibility_threshold),
            ("weight_perturb_stddev", self.weight_perturb_stddev),
            ("weight_replace_range", self.weight_replace_range),
            ("initial_weight_range", self.initial_weight_range),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("neat.{name} must be finite and >= 0")));
            }
        }
        if !(self.weight_clamp.is_finite() && self.weight_clamp > 0.0) {
            return Err(Error::Config("neat.weight_clamp must be > 0".into()));
        }
        Ok(())
    }

    /// Structural and numeric mutation switched off entirely.
    pub fn frozen(&self) -> Self {
        NeatConfig {
            weight_mutate_rate: 0.0,
            bias_mutate_rate: 0.0,
            add_connection_prob: 0.0,
            delete_connection_prob: 0.0,
            add_node_prob: 0.0,
            delete_node_prob: 0.0,
            ..self.clone()
        }
    }
}
