use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Historical markings shared by one population.
///
/// A given (from, to) pair always maps to the same innovation number and a
/// given split connection always proposes the same hidden node id, so
/// identical structural mutations line up during crossover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RegistryRepr", into = "RegistryRepr")]
pub struct InnovationRegistry {
    next_innovation: u32,
    next_node: u32,
    connections: BTreeMap<(u32, u32), u32>,
    splits: BTreeMap<u32, u32>,
}

impl InnovationRegistry {
    /// Node ids below `inputs + outputs` are reserved for the fixed layers.
    pub fn new(inputs: usize, outputs: usize) -> Self {
        InnovationRegistry {
            next_innovation: 0,
            next_node: (inputs + outputs) as u32,
            connections: BTreeMap::new(),
            splits: BTreeMap::new(),
        }
    }

    pub fn connection(&mut self, from: u32, to: u32) -> u32 {
        let next = &mut self.next_innovation;
        *self.connections.entry((from, to)).or_insert_with(|| {
            let id = *next;
            *next += 1;
            id
        })
    }

    /// Node id for splitting connection `innovation`.
    pub fn split_node(&mut self, innovation: u32) -> u32 {
        let next = &mut self.next_node;
        *self.splits.entry(innovation).or_insert_with(|| {
            let id = *next;
            *next += 1;
            id
        })
    }

    pub fn fresh_node(&mut self) -> u32 {
        let id = self.next_node;
        self.next_node += 1;
        id
    }

    pub fn next_innovation(&self) -> u32 {
        self.next_innovation
    }
}

#[derive(Serialize, Deserialize)]
struct RegistryRepr {
    next_innovation: u32,
    next_node: u32,
    connections: Vec<(u32, u32, u32)>,
    splits: Vec<(u32, u32)>,
}

impl From<InnovationRegistry> for RegistryRepr {
    fn from(r: InnovationRegistry) -> Self {
        RegistryRepr {
            next_innovation: r.next_innovation,
            next_node: r.next_node,
            connections: r.connections.into_iter().map(|((f, t), i)| (f, t, i)).collect(),
            splits: r.splits.into_iter().collect(),
        }
    }
}

impl From<RegistryRepr> for InnovationRegistry {
    fn from(r: RegistryRepr) -> Self {
        InnovationRegistry {
            next_innovation: r.next_innovation,
            next_node: r.next_node,
            connections: r.connections.into_iter().map(|(f, t, i)| ((f, t), i)).collect(),
            splits: r.splits.into_iter().collect(),
        }
    }
}
