//! Genetic-algorithm baseline: fitness-proportional pair selection,
//! midpoint crossover, single-attribute mutation and truncation selection.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Fitness, Policy};
use crate::domain::{attribute_table, SpiderState, ATTRIBUTE_COUNT};
use crate::error::SessionError;
use crate::seed::StreamRng;
use crate::session::Presenter;

/// Crossover point: children swap the first three attributes.
const CROSSOVER_POINT: usize = ATTRIBUTE_COUNT / 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub population_size: usize,
    pub mutation_prob: f64,
    pub pairs_per_generation: usize,
    /// 2 keeps both crossover children; 1 keeps only the first of each pair.
    pub children_per_pair: usize,
    /// Stop presenting a batch at its first successful member instead of
    /// presenting the whole batch.
    pub stop_within_batch: bool,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population_size: 10,
            mutation_prob: 0.1,
            pairs_per_generation: 2,
            children_per_pair: 2,
            stop_within_batch: false,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |what: &str| Err(SessionError::InvalidConfig(what.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("mutation_prob must lie in [0, 1]");
        }
        if self.pairs_per_generation == 0 {
            return bad("pairs_per_generation must be at least 1");
        }
        if !(1..=2).contains(&self.children_per_pair) {
            return bad("children_per_pair must be 1 or 2");
        }
        Ok(())
    }

    pub fn offspring_per_generation(&self) -> usize {
        self.pairs_per_generation * self.children_per_pair
    }
}

/// Opening population: the initial state and its neighbors, cut to the
/// fittest `population_size` when there are more. Members keep candidate
/// order (initial first, then neighbors in canonical action order).
pub fn ga_initial_population(initial: SpiderState, fitness: &Fitness<'_>, cfg: &GAConfig) -> Vec<SpiderState> {
    let mut candidates = vec![initial];
    candidates.extend(initial.neighbors());
    if candidates.len() <= cfg.population_size {
        return candidates;
    }
    let scores: Vec<f64> = candidates.iter().map(|s| fitness.of(s)).collect();
    let mut keep = vec![false; candidates.len()];
    for i in top_indices(&scores, cfg.population_size) {
        keep[i] = true;
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

/// Indices of the `k` largest scores; ties go to the earlier index.
fn top_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Midpoint crossover: the child takes `head`'s first half and `tail`'s second.
pub fn crossover(head: &SpiderState, tail: &SpiderState) -> SpiderState {
    let mut values = head.values();
    values[CROSSOVER_POINT..].copy_from_slice(&tail.values()[CROSSOVER_POINT..]);
    SpiderState::new(values).expect("positions keep their ranges")
}

/// With probability `prob`, sets one random attribute to a random value in
/// its range (possibly the value it already had).
pub fn mutate<R: Rng + ?Sized>(state: SpiderState, prob: f64, rng: &mut R) -> SpiderState {
    if rng.random::<f64>() >= prob {
        return state;
    }
    let attribute = rng.random_range(0..ATTRIBUTE_COUNT);
    let spec = &attribute_table()[attribute];
    let value = rng.random_range(spec.min_value..=spec.max_value);
    state.with_value(attribute, value).expect("value drawn from range")
}

/// Samples a parent index with probability proportional to `fitness + 1`.
pub struct ParentSampler {
    weighted: Option<WeightedIndex<f64>>,
    len: usize,
}

impl ParentSampler {
    pub fn new(fitnesses: &[f64]) -> Self {
        let shifted = fitnesses.iter().map(|f| (f + 1.0).max(0.0));
        ParentSampler {
            // all-zero weights fall back to uniform sampling
            weighted: WeightedIndex::new(shifted).ok(),
            len: fitnesses.len(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.weighted {
            Some(w) => w.sample(rng),
            None => rng.random_range(0..self.len),
        }
    }
}

/// Breeds one generation of offspring from `population`.
pub fn ga_generation<R: Rng + ?Sized>(
    population: &[SpiderState],
    fitnesses: &[f64],
    cfg: &GAConfig,
    rng: &mut R,
) -> Vec<SpiderState> {
    assert!(!population.is_empty(), "population must be nonempty");
    assert_eq!(population.len(), fitnesses.len(), "fitnesses must align with population");
    let sampler = ParentSampler::new(fitnesses);
    let mut offspring = Vec::with_capacity(cfg.offspring_per_generation());
    for _ in 0..cfg.pairs_per_generation {
        let first = population[sampler.sample(rng)];
        let second = population[sampler.sample(rng)];
        offspring.push(mutate(crossover(&first, &second), cfg.mutation_prob, rng));
        if cfg.children_per_pair == 2 {
            offspring.push(mutate(crossover(&second, &first), cfg.mutation_prob, rng));
        }
    }
    offspring
}

/// Keeps the `population_size` fittest members of `pool`, fittest first.
pub fn ga_select(pool: &[SpiderState], fitnesses: &[f64], cfg: &GAConfig) -> Vec<SpiderState> {
    assert_eq!(pool.len(), fitnesses.len(), "fitnesses must align with pool");
    top_indices(fitnesses, cfg.population_size)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

pub struct GeneticPolicy {
    cfg: GAConfig,
    population: Vec<SpiderState>,
}

impl GeneticPolicy {
    pub fn new(cfg: GAConfig) -> Self {
        GeneticPolicy { cfg, population: Vec::new() }
    }

    pub fn population(&self) -> &[SpiderState] {
        &self.population
    }

    /// Presents a batch; success is judged once the batch is complete
    /// unless `stop_within_batch` is set.
    fn present_batch(&self, batch: &[SpiderState], env: &mut Presenter<'_>) -> Option<SpiderState> {
        let mut found = None;
        for state in batch {
            let seen = env.present(*state);
            if seen.success && found.is_none() {
                found = Some(*state);
                if self.cfg.stop_within_batch {
                    break;
                }
            }
        }
        found
    }
}

impl Policy for GeneticPolicy {
    fn start(&mut self, initial: SpiderState, env: &mut Presenter<'_>, _rng: &mut StreamRng) -> Option<SpiderState> {
        self.population = ga_initial_population(initial, env.fitness(), &self.cfg);
        let population = self.population.clone();
        self.present_batch(&population, env)
    }

    fn step(&mut self, env: &mut Presenter<'_>, rng: &mut StreamRng) -> Option<SpiderState> {
        let fitness = *env.fitness();
        let scores: Vec<f64> = self.population.iter().map(|s| fitness.of(s)).collect();
        let offspring = ga_generation(&self.population, &scores, &self.cfg, rng);
        let found = self.present_batch(&offspring, env);

        let mut pool = std::mem::take(&mut self.population);
        let mut pool_scores = scores;
        pool_scores.extend(offspring.iter().map(|s| fitness.of(s)));
        pool.extend(offspring);
        self.population = ga_select(&pool, &pool_scores, &self.cfg);
        found
    }

    fn current(&self) -> SpiderState {
        self.population[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::RewardSpec;
    use crate::subjects::VirtualSubject;
    use rand::SeedableRng;

    fn s(v: [u8; 6]) -> SpiderState {
        SpiderState::new(v).unwrap()
    }

    fn subject() -> VirtualSubject {
        VirtualSubject::from_weights(0, [0.97, 0.87, 0.07, 0.63, 0.67, 0.77]).unwrap()
    }

    #[test]
    fn initial_population_sizes() {
        let subj = subject();
        let fit = Fitness::new(&subj, RewardSpec::new(5).unwrap());
        let cfg = GAConfig::default();
        let corner = ga_initial_population(SpiderState::MIN, &fit, &cfg);
        assert_eq!(corner.len(), 7);
        assert_eq!(corner[0], SpiderState::MIN);
        let avg = ga_initial_population(SpiderState::AVERAGE, &fit, &cfg);
        assert_eq!(avg.len(), 10);
        // the two dropped candidates are the two least fit
        let mut all = vec![SpiderState::AVERAGE];
        all.extend(SpiderState::AVERAGE.neighbors());
        let kept_min = avg.iter().map(|s| fit.of(s)).fold(f64::INFINITY, f64::min);
        let dropped: Vec<_> = all.iter().filter(|s| !avg.contains(s)).collect();
        assert_eq!(dropped.len(), 2);
        assert!(dropped.iter().all(|d| fit.of(d) <= kept_min));
    }

    #[test]
    fn midpoint_crossover() {
        let a = SpiderState::MIN;
        let b = SpiderState::MAX;
        assert_eq!(crossover(&a, &b), s([0, 0, 0, 2, 1, 2]));
        assert_eq!(crossover(&b, &a), s([2, 2, 2, 0, 0, 0]));
    }

    #[test]
    fn no_mutation_means_pure_crossover() {
        let cfg = GAConfig { mutation_prob: 0.0, ..Default::default() };
        let pop = [SpiderState::MIN, SpiderState::MAX];
        let mut rng = StreamRng::seed_from_u64(1);
        for _ in 0..50 {
            let kids = ga_generation(&pop, &[0.0, 0.0], &cfg, &mut rng);
            assert_eq!(kids.len(), 4);
            let allowed = [SpiderState::MIN, SpiderState::MAX, s([0, 0, 0, 2, 1, 2]), s([2, 2, 2, 0, 0, 0])];
            assert!(kids.iter().all(|k| allowed.contains(k)));
        }
        let same = [SpiderState::AVERAGE];
        let kids = ga_generation(&same, &[0.3], &cfg, &mut rng);
        assert!(kids.iter().all(|k| *k == SpiderState::AVERAGE));
    }

    #[test]
    fn offspring_count_follows_config() {
        let mut rng = StreamRng::seed_from_u64(2);
        let pop = [SpiderState::MIN, SpiderState::AVERAGE];
        let one = GAConfig { children_per_pair: 1, ..Default::default() };
        assert_eq!(ga_generation(&pop, &[0.1, 0.2], &one, &mut rng).len(), 2);
        let three_pairs = GAConfig { pairs_per_generation: 3, ..Default::default() };
        assert_eq!(ga_generation(&pop, &[0.1, 0.2], &three_pairs, &mut rng).len(), 6);
    }

    #[test]
    fn zero_weights_fall_back_to_uniform() {
        let sampler = ParentSampler::new(&[-1.0, -1.0, -1.0]);
        let mut rng = StreamRng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            counts[sampler.sample(&mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| c > 800));
    }

    #[test]
    fn proportional_sampling_frequencies() {
        let fit = [-1.0, 0.0, 0.5, 1.0];
        let shifted: Vec<f64> = fit.iter().map(|f| f + 1.0).collect();
        let total: f64 = shifted.iter().sum();
        let sampler = ParentSampler::new(&fit);
        let mut rng = StreamRng::seed_from_u64(4);
        let n = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sampler.sample(&mut rng)] += 1;
        }
        for (c, w) in counts.iter().zip(&shifted) {
            let expected = w / total;
            let got = *c as f64 / n as f64;
            // binomial standard error is below 0.0012 here
            assert!((got - expected).abs() < 0.006, "{got} vs {expected}");
        }
    }

    #[test]
    fn selection_rules() {
        let cfg = GAConfig::default();
        let pool: Vec<SpiderState> = crate::domain::enumerate_states().into_iter().take(14).collect();

        let seven: Vec<f64> = (0..7).map(|i| i as f64 / 10.0).collect();
        assert_eq!(ga_select(&pool[..7], &seven, &cfg).len(), 7);

        let distinct: Vec<f64> = (0..14).map(|i| ((i * 5) % 14) as f64 / 14.0).collect();
        let picked = ga_select(&pool, &distinct, &cfg);
        assert_eq!(picked.len(), 10);
        let mut sorted = distinct.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let cutoff = sorted[9];
        for (st, f) in pool.iter().zip(&distinct) {
            assert_eq!(picked.contains(st), *f >= cutoff);
        }

        let flat = vec![0.25; 14];
        assert_eq!(ga_select(&pool, &flat, &cfg), pool[..10].to_vec());
    }

    #[test]
    fn mutation_stays_valid() {
        let mut rng = StreamRng::seed_from_u64(5);
        let mut changed = 0;
        for _ in 0..2000 {
            let m = mutate(SpiderState::MAX, 1.0, &mut rng);
            if m != SpiderState::MAX {
                changed += 1;
            }
        }
        // a forced mutation keeps the old value with probability ~0.39
        assert!((1000..1500).contains(&changed), "{changed}");
    }
}
