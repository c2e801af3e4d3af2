//! Generational genetic search over attribute masks.
//!
//! Each generation: tournament-select a full parent population, pair
//! neighbours for crossover (per-pair probability), mutate (per-individual
//! probability, per-gene flip rate), evaluate the offspring whose genes may
//! have changed, and replace the population wholesale. The best mask ever
//! evaluated is tracked outside the population.

mod fitness;
mod ops;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeMask, SeenData, ZslBundle};
use crate::error::{Error, Result};
use crate::eval::{unseen_accuracy, SaeSettings, TrainingCounter};
use crate::par;
use crate::partition::FoldPlan;
use crate::seed;
use rand::Rng;

pub use fitness::{fitness, FitnessCache, FitnessContext};
pub use ops::{crossover, flip_bits, hamming_distance, population_diversity, tournament, CrossoverKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    /// `None` means `1 / N`.
    pub per_gene_mutation_rate: Option<f64>,
    pub init_density: f64,
    pub crossover: CrossoverKind,
    pub seed: u64,
    pub use_cv: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 50,
            generations: 150,
            tournament_size: 3,
            crossover_probability: 0.2,
            mutation_probability: 0.8,
            per_gene_mutation_rate: None,
            init_density: 0.5,
            crossover: CrossoverKind::Uniform,
            seed: 0,
            use_cv: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        prob("crossover_probability", self.crossover_probability)?;
        prob("mutation_probability", self.mutation_probability)?;
        if let Some(r) = self.per_gene_mutation_rate {
            prob("per_gene_mutation_rate", r)?;
        }
        if !(self.init_density > 0.0 && self.init_density < 1.0) {
            return Err(Error::InvalidConfig(format!("init_density must lie in (0, 1), got {}", self.init_density)));
        }
        if self.pop_size < 2 {
            return Err(Error::InvalidConfig("pop_size must be at least 2".into()));
        }
        if self.tournament_size < 1 {
            return Err(Error::InvalidConfig("tournament_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn gene_rate(&self, n_attributes: usize) -> f64 {
        self.per_gene_mutation_rate.unwrap_or(1.0 / n_attributes.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub mask: AttributeMask,
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best fitness seen so far in the run.
    pub best: f64,
    pub population_best: f64,
    pub mean: f64,
    pub diversity: f64,
    /// Cumulative.
    pub cache_hits: u64,
    pub cache_misses: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaTrace {
    pub records: Vec<GenerationRecord>,
    pub best_mask: AttributeMask,
    pub best_fitness: f64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub sae_trainings: u64,
}

impl GaTrace {
    /// `generation,best,mean,diversity,cache_hits,cache_misses`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best,mean,diversity,cache_hits,cache_misses\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.generation, r.best, r.mean, r.diversity, r.cache_hits, r.cache_misses
            ));
        }
        out
    }
}

fn better(f: f64, mask: &AttributeMask, best_f: f64, best: &AttributeMask) -> bool {
    f > best_f || (f == best_f && mask.count() < best.count())
}

fn record(
    generation: usize,
    pop: &[Individual],
    best: f64,
    cache: &FitnessCache,
) -> Result<GenerationRecord> {
    let fits: Vec<f64> = pop.iter().map(|i| i.fitness.expect("evaluated")).collect();
    let masks: Vec<AttributeMask> = pop.iter().map(|i| i.mask.clone()).collect();
    Ok(GenerationRecord {
        generation,
        best,
        population_best: fits.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: fits.iter().sum::<f64>() / fits.len() as f64,
        diversity: population_diversity(&masks)?,
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
    })
}

fn evaluate(pop: &mut [Individual], ctx: &FitnessContext, cache: &mut FitnessCache, counter: &TrainingCounter) {
    let idx: Vec<usize> = (0..pop.len()).filter(|&i| pop[i].fitness.is_none()).collect();
    let masks: Vec<AttributeMask> = idx.iter().map(|&i| pop[i].mask.clone()).collect();
    let values = cache.evaluate_batch(ctx, &masks, counter);
    for (i, v) in idx.into_iter().zip(values) {
        pop[i].fitness = Some(v);
    }
}

/// Runs the search against a prepared fitness context. The result depends only
/// on the context contents and `config`.
pub fn run_ga_with(ctx: &FitnessContext, config: &GaConfig) -> Result<GaTrace> {
    config.validate()?;
    let n = ctx.n_attributes();
    let gene_rate = config.gene_rate(n);
    let mut rng = seed::rng_from(seed::derive_seed(config.seed, &[seed::TAG_GA]));
    let mut cache = FitnessCache::new(n);
    let counter = TrainingCounter::new();

    let mut pop: Vec<Individual> = (0..config.pop_size)
        .map(|_| Individual {
            mask: AttributeMask::from_bits((0..n).map(|_| rng.random::<f64>() < config.init_density).collect()),
            fitness: None,
        })
        .collect();
    evaluate(&mut pop, ctx, &mut cache, &counter);

    let mut best_mask = pop[0].mask.clone();
    let mut best_fitness = f64::NEG_INFINITY;
    let track = |pop: &[Individual], best_mask: &mut AttributeMask, best_fitness: &mut f64| {
        for ind in pop {
            let f = ind.fitness.expect("evaluated");
            if better(f, &ind.mask, *best_fitness, best_mask) {
                *best_fitness = f;
                *best_mask = ind.mask.clone();
            }
        }
    };
    track(&pop, &mut best_mask, &mut best_fitness);
    let mut records = vec![record(0, &pop, best_fitness, &cache)?];

    for generation in 1..=config.generations {
        let fits: Vec<f64> = pop.iter().map(|i| i.fitness.expect("evaluated")).collect();
        let mut offspring: Vec<Individual> = (0..pop.len())
            .map(|_| pop[tournament(&fits, config.tournament_size, &mut rng)].clone())
            .collect();
        for i in (1..offspring.len()).step_by(2) {
            if rng.random::<f64>() < config.crossover_probability {
                let (left, right) = offspring.split_at_mut(i);
                crossover(&mut left[i - 1].mask, &mut right[0].mask, config.crossover, &mut rng);
                left[i - 1].fitness = None;
                right[0].fitness = None;
            }
        }
        for ind in &mut offspring {
            if rng.random::<f64>() < config.mutation_probability {
                flip_bits(&mut ind.mask, gene_rate, &mut rng);
                ind.fitness = None;
            }
        }
        evaluate(&mut offspring, ctx, &mut cache, &counter);
        pop = offspring;
        track(&pop, &mut best_mask, &mut best_fitness);
        records.push(record(generation, &pop, best_fitness, &cache)?);
    }

    Ok(GaTrace {
        records,
        best_mask,
        best_fitness,
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
        sae_trainings: counter.get(),
    })
}

pub fn run_ga(seen: &SeenData, plan: &FoldPlan, config: &GaConfig, settings: SaeSettings) -> Result<GaTrace> {
    let ctx = FitnessContext::new(seen, plan, settings, config.use_cv)?;
    run_ga_with(&ctx, config)
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub outcome: std::result::Result<RunOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: GaTrace,
    pub unseen_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct MultiRunResult {
    pub runs: Vec<RunRecord>,
    /// Per attribute: number of successful runs whose best mask selects it.
    pub frequency: Vec<usize>,
    pub mean_accuracy: f64,
    /// Half-width of a normal-approximation 95% interval on the mean.
    pub ci95: f64,
    /// SAE solves across all runs, including final retraining.
    pub sae_trainings: u64,
}

impl MultiRunResult {
    pub fn successful(&self) -> impl Iterator<Item = (&RunRecord, &RunOutcome)> {
        self.runs.iter().filter_map(|r| r.outcome.as_ref().ok().map(|o| (r, o)))
    }
}

pub fn run_seed(master: u64, run: usize) -> u64 {
    seed::derive_seed(master, &[seed::TAG_GA, run as u64])
}

/// Independent searches with seeds derived from `config.seed`; each run's best
/// mask is retrained on all seen classes and scored on the unseen test set.
pub fn multi_run(
    bundle: &ZslBundle,
    plan: &FoldPlan,
    config: &GaConfig,
    settings: SaeSettings,
    runs: usize,
) -> Result<MultiRunResult> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    config.validate()?;
    let ctx = FitnessContext::new(&bundle.seen_data(), plan, settings, config.use_cv)?;
    let final_counter = TrainingCounter::new();
    let records = par::map_range(runs, |run| {
        let seed = run_seed(config.seed, run);
        let cfg = GaConfig { seed, ..config.clone() };
        let outcome = run_ga_with(&ctx, &cfg)
            .and_then(|trace| {
                let (acc, _) = unseen_accuracy(bundle, &trace.best_mask, settings, &final_counter)?;
                Ok(RunOutcome { trace, unseen_accuracy: acc })
            })
            .map_err(|e| {
                log::warn!("GA run {run} failed: {e}");
                e.to_string()
            });
        RunRecord { run, seed, outcome }
    });
    let n = bundle.n_attributes();
    let mut frequency = vec![0usize; n];
    let mut accs = Vec::new();
    let mut trainings = final_counter.get();
    for r in &records {
        if let Ok(o) = &r.outcome {
            for j in o.trace.best_mask.indices() {
                frequency[j] += 1;
            }
            accs.push(o.unseen_accuracy);
            trainings += o.trace.sae_trainings;
        }
    }
    let (mean_accuracy, ci95) = mean_ci(&accs);
    Ok(MultiRunResult { runs: records, frequency, mean_accuracy, ci95, sae_trainings: trainings })
}

fn mean_ci(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        assert!(GaConfig { crossover_probability: 1.5, ..Default::default() }.validate().is_err());
        assert!(GaConfig { pop_size: 1, ..Default::default() }.validate().is_err());
        assert!(GaConfig { tournament_size: 0, ..Default::default() }.validate().is_err());
        assert!(GaConfig { init_density: 1.0, ..Default::default() }.validate().is_err());
        assert_eq!(GaConfig::default().gene_rate(20), 0.05);
    }

    #[test]
    fn config_json_defaults() {
        let c: GaConfig = serde_json::from_str(r#"{"generations": 10, "crossover": "two_point"}"#).unwrap();
        assert_eq!(c.generations, 10);
        assert_eq!(c.pop_size, 50);
        assert_eq!(c.crossover, CrossoverKind::TwoPoint);
    }

    #[test]
    fn mean_and_interval() {
        assert_eq!(mean_ci(&[0.5]), (0.5, 0.0));
        let (m, ci) = mean_ci(&[0.0, 1.0]);
        assert_eq!(m, 0.5);
        assert!((ci - 1.96 * (0.5f64 / 2.0).sqrt()).abs() < 1e-12);
    }
}
