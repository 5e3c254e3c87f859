use std::collections::BTreeMap;

use rand::Rng;

use super::config::NeatConfig;
use super::genome::Genome;
use crate::error::{Error, Result};

/// Recombines two parents aligned by innovation number.
///
/// Matching genes come from either parent with equal chance. Disjoint and
/// excess genes, and the node set, come from the fitter parent (a coin flip
/// picks one on a tie). A gene that is enabled in one parent and disabled in
/// the other is disabled in the child with `disable_inherit_prob`.
pub fn crossover<R: Rng + ?Sized>(
    parent_a: &Genome,
    parent_b: &Genome,
    fitness_a: f64,
    fitness_b: f64,
    config: &NeatConfig,
    rng: &mut R,
) -> Result<Genome> {
    if parent_a.arity() != parent_b.arity() {
        return Err(Error::Breeding {
            a: parent_a.arity(),
            b: parent_b.arity(),
        });
    }
    let a_is_primary = if fitness_a == fitness_b {
        rng.random_bool(0.5)
    } else {
        fitness_a > fitness_b
    };
    let (primary, secondary) = if a_is_primary {
        (parent_a, parent_b)
    } else {
        (parent_b, parent_a)
    };

    let other: BTreeMap<u32, _> = secondary.connections.iter().map(|c| (c.innovation, c)).collect();
    let mut connections = Vec::with_capacity(primary.connections.len());
    for gene in &primary.connections {
        let child_gene = match other.get(&gene.innovation) {
            Some(&match_gene) => {
                let mut picked = if rng.random_bool(0.5) { gene.clone() } else { match_gene.clone() };
                if gene.enabled != match_gene.enabled {
                    picked.enabled = !rng.random_bool(config.disable_inherit_prob);
                }
                picked
            }
            None => gene.clone(),
        };
        connections.push(child_gene);
    }

    let other_nodes: BTreeMap<u32, _> = secondary.nodes.iter().map(|n| (n.id, n)).collect();
    let nodes = primary
        .nodes
        .iter()
        .map(|n| match other_nodes.get(&n.id) {
            Some(&m) if rng.random_bool(0.5) => m.clone(),
            _ => n.clone(),
        })
        .collect();

    let mut child = Genome {
        input_arity: primary.input_arity,
        output_arity: primary.output_arity,
        nodes,
        connections,
    };
    child.sort_genes();
    debug_assert!(child.validate().is_ok());
    Ok(child)
}
