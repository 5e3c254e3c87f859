use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::innovation::InnovationRegistry;
use super::network::Network;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Input,
    Output,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u32,
    pub role: NodeRole,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: u32,
    pub from: u32,
    pub to: u32,
    pub weight: f64,
    pub enabled: bool,
}

/// A feed-forward network description. Nodes are kept sorted by id and
/// connections by innovation number.
///
/// Input nodes take ids `0..input_arity`, outputs the next `output_arity`
/// ids; hidden ids come from the population's [`InnovationRegistry`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub input_arity: usize,
    pub output_arity: usize,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
}

impl Genome {
    /// Input layer fully connected to the output layer, no hidden nodes,
    /// zero biases, weights uniform in `[-weight_range, weight_range]`.
    pub fn minimal<R: Rng + ?Sized>(
        input_arity: usize,
        output_arity: usize,
        weight_range: f64,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) -> Self {
        let mut nodes = Vec::with_capacity(input_arity + output_arity);
        for id in 0..input_arity {
            nodes.push(NodeGene { id: id as u32, role: NodeRole::Input, bias: 0.0 });
        }
        for o in 0..output_arity {
            let id = (input_arity + o) as u32;
            nodes.push(NodeGene { id, role: NodeRole::Output, bias: 0.0 });
        }
        let mut connections = Vec::with_capacity(input_arity * output_arity);
        for i in 0..input_arity as u32 {
            for o in 0..output_arity as u32 {
                let to = input_arity as u32 + o;
                let weight = if weight_range > 0.0 {
                    rng.random_range(-weight_range..=weight_range)
                } else {
                    0.0
                };
                connections.push(ConnectionGene {
                    innovation: registry.connection(i, to),
                    from: i,
                    to,
                    weight,
                    enabled: true,
                });
            }
        }
        let mut g = Genome { input_arity, output_arity, nodes, connections };
        g.sort_genes();
        g
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.input_arity, self.output_arity)
    }

    pub(crate) fn sort_genes(&mut self) {
        self.nodes.sort_by_key(|n| n.id);
        self.connections.sort_by_key(|c| c.innovation);
    }

    pub fn node(&self, id: u32) -> Option<&NodeGene> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn hidden_nodes(&self) -> impl Iterator<Item = &NodeGene> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Hidden)
    }

    pub fn has_pair(&self, from: u32, to: u32) -> bool {
        self.connections.iter().any(|c| c.from == from && c.to == to)
    }

    /// True if a directed path `start -> ... -> goal` exists over every
    /// connection gene, enabled or not.
    pub fn has_path(&self, start: u32, goal: u32) -> bool {
        let mut adjacency: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for c in &self.connections {
            adjacency.entry(c.from).or_default().push(c.to);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            if n == goal {
                return true;
            }
            if seen.insert(n) {
                if let Some(next) = adjacency.get(&n) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        false
    }

    pub fn compile(&self) -> Network {
        Network::from_genome(self)
    }

    /// One forward pass; outputs lie in (-1, 1).
    pub fn activate(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        self.compile().activate(inputs)
    }

    /// Checks every structural invariant, returning the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(format!("duplicate node id {}", n.id));
            }
            let expected = if (n.id as usize) < self.input_arity {
                NodeRole::Input
            } else if (n.id as usize) < self.input_arity + self.output_arity {
                NodeRole::Output
            } else {
                NodeRole::Hidden
            };
            if n.role != expected {
                return Err(format!("node {} has role {:?}, expected {:?}", n.id, n.role, expected));
            }
            if !n.bias.is_finite() {
                return Err(format!("node {} has non-finite bias", n.id));
            }
        }
        for id in 0..(self.input_arity + self.output_arity) as u32 {
            if !ids.contains(&id) {
                return Err(format!("missing fixed node {id}"));
            }
        }

        let mut innovations = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for c in &self.connections {
            if !innovations.insert(c.innovation) {
                return Err(format!("duplicate innovation {}", c.innovation));
            }
            if !pairs.insert((c.from, c.to)) {
                return Err(format!("duplicate connection {} -> {}", c.from, c.to));
            }
            if !ids.contains(&c.from) || !ids.contains(&c.to) {
                return Err(format!("connection {} references a missing node", c.innovation));
            }
            if (c.to as usize) < self.input_arity {
                return Err(format!("connection {} feeds input node {}", c.innovation, c.to));
            }
            if !c.weight.is_finite() {
                return Err(format!("connection {} has non-finite weight", c.innovation));
            }
        }
        if let Some(c) = self.connections.iter().find(|c| self.has_path(c.to, c.from)) {
            return Err(format!("cycle through connection {}", c.innovation));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut g: Genome = serde_json::from_str(text)?;
        g.sort_genes();
        g.validate().map_err(|e| Error::Config(format!("invalid genome: {e}")))?;
        Ok(g)
    }
}
