use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::NeatConfig;
use super::genome::{ConnectionGene, Genome, NodeGene, NodeRole};
use super::innovation::InnovationRegistry;

impl Genome {
    /// Applies every mutation operator once, each with its own probability.
    /// Draws that would break an invariant are skipped.
    pub fn mutate<R: Rng + ?Sized>(
        &mut self,
        config: &NeatConfig,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) {
        self.mutate_weights(config, rng);
        self.mutate_biases(config, rng);
        if rng.random_bool(config.add_connection_prob) {
            self.mutate_add_connection(config, registry, rng);
        }
        if rng.random_bool(config.delete_connection_prob) {
            self.mutate_delete_connection(rng);
        }
        if rng.random_bool(config.add_node_prob) {
            self.mutate_add_node(registry, rng);
        }
        if rng.random_bool(config.delete_node_prob) {
            self.mutate_delete_node(rng);
        }
    }

    pub fn mutate_weights<R: Rng + ?Sized>(&mut self, config: &NeatConfig, rng: &mut R) {
        for c in &mut self.connections {
            if rng.random_bool(config.weight_mutate_rate) {
                c.weight = mutated_value(c.weight, config, rng);
            }
        }
    }

    pub fn mutate_biases<R: Rng + ?Sized>(&mut self, config: &NeatConfig, rng: &mut R) {
        for n in self.nodes.iter_mut().filter(|n| n.role != NodeRole::Input) {
            if rng.random_bool(config.bias_mutate_rate) {
                n.bias = mutated_value(n.bias, config, rng);
            }
        }
    }

    /// Adds a random new link. A rejected draw (duplicate, self-loop or
    /// cycle) is redrawn once. Returns whether a link was added.
    pub fn mutate_add_connection<R: Rng + ?Sized>(
        &mut self,
        config: &NeatConfig,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) -> bool {
        let sources: Vec<u32> = self.nodes.iter().map(|n| n.id).collect();
        let targets: Vec<u32> = self
            .nodes
            .iter()
            .filter(|n| n.role != NodeRole::Input)
            .map(|n| n.id)
            .collect();

        for _ in 0..2 {
            let from = *sources.choose(rng).expect("genome has nodes");
            let to = *targets.choose(rng).expect("genome has outputs");
            if from == to || self.has_pair(from, to) || self.has_path(to, from) {
                continue;
            }
            let weight = if config.initial_weight_range > 0.0 {
                rng.random_range(-config.initial_weight_range..=config.initial_weight_range)
            } else {
                0.0
            };
            self.connections.push(ConnectionGene {
                innovation: registry.connection(from, to),
                from,
                to,
                weight,
                enabled: true,
            });
            self.sort_genes();
            return true;
        }
        false
    }

    pub fn mutate_delete_connection<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.connections.is_empty() {
            return false;
        }
        let i = rng.random_range(0..self.connections.len());
        self.connections.remove(i);
        true
    }

    /// Splits a random enabled link `a -> b` into `a -> new -> b`; the old
    /// link is disabled, the incoming weight is 1 and the outgoing weight is
    /// the old one.
    pub fn mutate_add_node<R: Rng + ?Sized>(
        &mut self,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) -> bool {
        let enabled: Vec<usize> = (0..self.connections.len())
            .filter(|&i| self.connections[i].enabled)
            .collect();
        let Some(&idx) = enabled.choose(rng) else {
            return false;
        };
        self.split_connection(idx, registry);
        true
    }

    pub(crate) fn split_connection(&mut self, idx: usize, registry: &mut InnovationRegistry) -> u32 {
        let old = self.connections[idx].clone();
        self.connections[idx].enabled = false;

        let mut node_id = registry.split_node(old.innovation);
        if self.node(node_id).is_some() {
            node_id = registry.fresh_node();
        }
        self.nodes.push(NodeGene { id: node_id, role: NodeRole::Hidden, bias: 0.0 });
        self.connections.push(ConnectionGene {
            innovation: registry.connection(old.from, node_id),
            from: old.from,
            to: node_id,
            weight: 1.0,
            enabled: true,
        });
        self.connections.push(ConnectionGene {
            innovation: registry.connection(node_id, old.to),
            from: node_id,
            to: old.to,
            weight: old.weight,
            enabled: true,
        });
        self.sort_genes();
        node_id
    }

    pub fn mutate_delete_node<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let hidden: Vec<u32> = self.hidden_nodes().map(|n| n.id).collect();
        let Some(&id) = hidden.choose(rng) else {
            return false;
        };
        self.nodes.retain(|n| n.id != id);
        self.connections.retain(|c| c.from != id && c.to != id);
        true
    }
}

fn mutated_value<R: Rng + ?Sized>(value: f64, config: &NeatConfig, rng: &mut R) -> f64 {
    let new = if rng.random_bool(config.weight_replace_prob) {
        let r = config.weight_replace_range;
        if r > 0.0 {
            rng.random_range(-r..=r)
        } else {
            0.0
        }
    } else {
        let noise = Normal::new(0.0, config.weight_perturb_stddev).expect("stddev is finite and >= 0");
        value + noise.sample(rng)
    };
    new.clamp(-config.weight_clamp, config.weight_clamp)
}
