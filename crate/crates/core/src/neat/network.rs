use std::collections::BTreeMap;

use super::genome::{Genome, NodeRole};
use crate::error::{Error, Result};

/// A genome flattened into evaluation order.
#[derive(Debug, Clone)]
pub struct Network {
    inputs: usize,
    /// (slot, bias, incoming (slot, weight)) for every non-input node.
    steps: Vec<(usize, f64, Vec<(usize, f64)>)>,
    outputs: Vec<usize>,
    slots: usize,
}

impl Network {
    pub fn from_genome(genome: &Genome) -> Self {
        let slot: BTreeMap<u32, usize> = genome
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();

        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); genome.nodes.len()];
        let mut indegree = vec![0usize; genome.nodes.len()];
        let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); genome.nodes.len()];
        for c in genome.connections.iter().filter(|c| c.enabled) {
            let (f, t) = (slot[&c.from], slot[&c.to]);
            incoming[t].push((f, c.weight));
            outgoing[f].push(t);
            indegree[t] += 1;
        }

        // Kahn's algorithm; the ready set is ordered by slot so evaluation
        // order is fixed.
        let mut ready: std::collections::BTreeSet<usize> =
            (0..genome.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(genome.nodes.len());
        while let Some(n) = ready.pop_first() {
            order.push(n);
            for &t in &outgoing[n] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        debug_assert_eq!(order.len(), genome.nodes.len(), "genome graph has a cycle");

        let steps = order
            .into_iter()
            .filter(|&i| genome.nodes[i].role != NodeRole::Input)
            .map(|i| (i, genome.nodes[i].bias, std::mem::take(&mut incoming[i])))
            .collect();
        let outputs = genome
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == NodeRole::Output)
            .map(|(i, _)| i)
            .collect();

        Network {
            inputs: genome.input_arity,
            steps,
            outputs,
            slots: genome.nodes.len(),
        }
    }

    pub fn input_arity(&self) -> usize {
        self.inputs
    }

    pub fn output_arity(&self) -> usize {
        self.outputs.len()
    }

    pub fn activate(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.inputs {
            return Err(Error::InputShape {
                expected: self.inputs,
                actual: inputs.len(),
            });
        }
        let mut values = vec![0.0; self.slots];
        // input nodes occupy the first slots because nodes are sorted by id
        values[..self.inputs].copy_from_slice(inputs);
        for (slot, bias, incoming) in &self.steps {
            let sum = incoming.iter().fold(*bias, |acc, &(src, w)| acc + w * values[src]);
            values[*slot] = sum.tanh();
        }
        Ok(self.outputs.iter().map(|&i| values[i]).collect())
    }
}
