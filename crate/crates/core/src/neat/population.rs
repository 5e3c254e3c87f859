use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::NeatConfig;
use super::crossover::crossover;
use super::genome::Genome;
use super::innovation::InnovationRegistry;
use super::species::{compatibility_distance, Species};
use crate::error::{Error, Result};

/// Fitness-proportionate pick. Falls back to a uniform pick when every
/// weight is zero.
pub fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return rng.random_range(0..weights.len());
    }
    let mut target = rng.random_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    // rounding left us past the end; the last positive weight wins
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Splits `slots` among shares by largest remainder; ties go to the earlier
/// share.
fn apportion(shares: &[f64], slots: usize) -> Vec<usize> {
    let total: f64 = shares.iter().sum();
    if shares.is_empty() {
        return Vec::new();
    }
    let exact: Vec<f64> = if total > 0.0 {
        shares.iter().map(|s| s / total * slots as f64).collect()
    } else {
        vec![slots as f64 / shares.len() as f64; shares.len()]
    };
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(slots.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub genomes: Vec<Genome>,
    pub species: Vec<Species>,
    pub generation: usize,
    next_species_id: usize,
}

impl Population {
    pub fn new<R: Rng + ?Sized>(
        config: &NeatConfig,
        inputs: usize,
        outputs: usize,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) -> Self {
        let genomes = (0..config.population_size)
            .map(|_| Genome::minimal(inputs, outputs, config.initial_weight_range, registry, rng))
            .collect();
        Population::from_genomes(genomes)
    }

    pub fn from_genomes(genomes: Vec<Genome>) -> Self {
        Population {
            genomes,
            species: Vec::new(),
            generation: 0,
            next_species_id: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    /// Greedy assignment to the first species whose representative is within
    /// the compatibility threshold; unmatched genomes found new species.
    pub fn speciate(&mut self, config: &NeatConfig) {
        for s in &mut self.species {
            s.members.clear();
        }
        for (i, g) in self.genomes.iter().enumerate() {
            let home = self.species.iter_mut().find(|s| {
                compatibility_distance(&s.representative, g, config) <= config.compatibility_threshold
            });
            match home {
                Some(s) => s.members.push(i),
                None => {
                    self.species.push(Species {
                        id: self.next_species_id,
                        representative: g.clone(),
                        members: vec![i],
                        best_fitness: f64::NEG_INFINITY,
                        staleness: 0,
                    });
                    self.next_species_id += 1;
                }
            }
        }
        self.species.retain(|s| !s.members.is_empty());
    }

    /// Indices of the `n` fittest genomes; ties go to the lower index.
    pub fn ranked(fitnesses: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..fitnesses.len()).collect();
        order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]).then(a.cmp(&b)));
        order
    }

    /// Replaces the population with the next generation: elites copied
    /// unchanged first, then offspring bred within species.
    pub fn next_generation<R: Rng + ?Sized>(
        &mut self,
        fitnesses: &[f64],
        config: &NeatConfig,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) -> Result<()> {
        if self.genomes.is_empty() {
            return Err(Error::Generation("empty population".into()));
        }
        if fitnesses.len() != self.genomes.len() {
            return Err(Error::Generation(format!(
                "{} fitness values for {} genomes",
                fitnesses.len(),
                self.genomes.len()
            )));
        }
        if let Some(i) = fitnesses.iter().position(|f| !f.is_finite()) {
            return Err(Error::Generation(format!("fitness of member {i} is not finite")));
        }

        self.speciate(config);
        for s in &mut self.species {
            let best = s.members.iter().map(|&i| fitnesses[i]).fold(f64::NEG_INFINITY, f64::max);
            if best > s.best_fitness {
                s.best_fitness = best;
                s.staleness = 0;
            } else {
                s.staleness += 1;
            }
        }

        let ranked = Population::ranked(fitnesses);
        let elite_count = config.elites.min(self.genomes.len());
        let elites = &ranked[..elite_count];

        self.species.retain(|s| {
            s.staleness < config.stagnation_limit || s.members.iter().any(|m| elites.contains(m))
        });

        let floor = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: Vec<f64> = fitnesses.iter().map(|f| f - floor).collect();
        let shares: Vec<f64> = self
            .species
            .iter()
            .map(|s| s.members.iter().map(|&i| shifted[i]).sum::<f64>() / s.members.len() as f64)
            .collect();
        let slots = config.population_size.saturating_sub(elite_count);
        let quotas = apportion(&shares, slots);

        let mut next: Vec<Genome> = elites.iter().map(|&i| self.genomes[i].clone()).collect();
        for (s, &quota) in self.species.iter().zip(&quotas) {
            let mut parents = s.members.clone();
            parents.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]).then(a.cmp(&b)));
            let keep = ((parents.len() as f64 * config.survival_threshold).ceil() as usize).clamp(1, parents.len());
            parents.truncate(keep);
            let weights: Vec<f64> = parents.iter().map(|&i| shifted[i]).collect();
            let mut quota = quota;
            if quota > 0
                && config.species_elite_min_size > 0
                && s.members.len() >= config.species_elite_min_size
                && !elites.contains(&parents[0])
            {
                next.push(self.genomes[parents[0]].clone());
                quota -= 1;
            }
            for _ in 0..quota {
                let pa = parents[roulette(&weights, rng)];
                let mut child = if rng.random_bool(config.crossover_rate) {
                    let pb = parents[roulette(&weights, rng)];
                    crossover(
                        &self.genomes[pa],
                        &self.genomes[pb],
                        fitnesses[pa],
                        fitnesses[pb],
                        config,
                        rng,
                    )?
                } else {
                    self.genomes[pa].clone()
                };
                child.mutate(config, registry, rng);
                next.push(child);
            }
        }

        // the next round compares against this round's species champions
        for s in &mut self.species {
            let champion = *s
                .members
                .iter()
                .max_by(|&&a, &&b| fitnesses[a].total_cmp(&fitnesses[b]).then(b.cmp(&a)))
                .expect("species are non-empty");
            s.representative = self.genomes[champion].clone();
        }

        self.genomes = next;
        self.generation += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn population(seed_value: u64, size: usize) -> (Population, InnovationRegistry, NeatConfig) {
        let config = NeatConfig { population_size: size, ..NeatConfig::default() };
        let mut reg = InnovationRegistry::new(3, 2);
        let pop = Population::new(&config, 3, 2, &mut reg, &mut seed::rng(seed_value));
        (pop, reg, config)
    }

    #[test]
    fn apportion_sums_to_slots() {
        assert_eq!(apportion(&[1.0, 1.0, 1.0], 16), vec![6, 5, 5]);
        assert_eq!(apportion(&[0.0, 0.0], 5), vec![3, 2]);
        assert_eq!(apportion(&[3.0, 1.0], 4), vec![3, 1]);
        assert_eq!(apportion(&[0.2, 0.0, 0.7], 16).iter().sum::<usize>(), 16);
    }

    #[test]
    fn elites_are_copied_verbatim() {
        let (mut pop, mut reg, config) = population(1, 20);
        let fitnesses: Vec<f64> = (0..20).map(|i| ((i * 7) % 20) as f64).collect();
        let before = pop.genomes.clone();
        let top: Vec<usize> = Population::ranked(&fitnesses)[..4].to_vec();
        pop.next_generation(&fitnesses, &config, &mut reg, &mut seed::rng(2)).unwrap();
        assert_eq!(pop.len(), 20);
        for (slot, &i) in top.iter().enumerate() {
            assert_eq!(pop.genomes[slot], before[i]);
        }
        for g in &pop.genomes {
            g.validate().unwrap();
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let fitnesses: Vec<f64> = (0..20).map(|i| (i as f64).sin().abs()).collect();
        let (mut a, mut ra, config) = population(3, 20);
        let (mut b, mut rb, _) = population(3, 20);
        for round in 0..5 {
            a.next_generation(&fitnesses, &config, &mut ra, &mut seed::rng(round)).unwrap();
            b.next_generation(&fitnesses, &config, &mut rb, &mut seed::rng(round)).unwrap();
        }
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn rejects_bad_fitness() {
        let (mut pop, mut reg, config) = population(4, 20);
        let mut f = vec![1.0; 20];
        f[3] = f64::NAN;
        assert!(pop.next_generation(&f, &config, &mut reg, &mut seed::rng(0)).is_err());
        assert!(pop.next_generation(&[1.0; 3], &config, &mut reg, &mut seed::rng(0)).is_err());
        let mut empty = Population::from_genomes(vec![]);
        assert!(empty.next_generation(&[], &config, &mut reg, &mut seed::rng(0)).is_err());
    }

    #[test]
    fn equal_fitness_selection_is_uniform() {
        // chi-squared goodness of fit, 19 degrees of freedom, p = 0.01 critical value
        const CRITICAL: f64 = 36.191;
        let weights = vec![0.0; 20];
        let mut counts = [0usize; 20];
        let mut rng = seed::rng(77);
        let draws = 10_000;
        for _ in 0..draws {
            counts[roulette(&weights, &mut rng)] += 1;
        }
        let expected = draws as f64 / 20.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < CRITICAL, "chi2 = {chi2}");
    }

    #[test]
    fn roulette_follows_weights() {
        let mut rng = seed::rng(5);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[roulette(&[1.0, 0.0, 3.0], &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        let ratio = counts[2] as f64 / counts[0] as f64;
        assert!((ratio - 3.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn identical_genomes_share_one_species() {
        let (pop, _, config) = population(6, 10);
        let mut same = Population::from_genomes(vec![pop.genomes[0].clone(); 10]);
        same.speciate(&config);
        assert_eq!(same.species.len(), 1);
        assert_eq!(same.species[0].members.len(), 10);
        assert_eq!(
            compatibility_distance(&same.species[0].representative, &same.species[0].representative, &config),
            0.0
        );
    }
}
