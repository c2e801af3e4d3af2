//! Fold-averaged pseudo-unseen accuracy as a fitness function, with memoisation.

use std::collections::{HashMap, HashSet};

use crate::data::{AttributeMask, SeenData};
use crate::error::Result;
use crate::eval::{SaeSettings, SplitProblem, TrainingCounter};
use crate::par;
use crate::partition::{fold_views, FoldPlan};

/// Prepared fold problems. With `use_cv = false` only the first fold is used.
#[derive(Debug, Clone)]
pub struct FitnessContext {
    problems: Vec<SplitProblem>,
    n_attributes: usize,
}

impl FitnessContext {
    pub fn new(seen: &SeenData, plan: &FoldPlan, settings: SaeSettings, use_cv: bool) -> Result<Self> {
        let folds = if use_cv { plan.k } else { 1 };
        let problems = par::map_range(folds, |k| {
            let v = fold_views(seen, plan, k)?;
            SplitProblem::new(&v.train, &v.train_semantics, &v.val, &v.val_semantics, settings)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self { problems, n_attributes: seen.semantics.n_attributes() })
    }

    pub fn n_folds(&self) -> usize {
        self.problems.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    /// Uncached fitness. Empty masks score 0 without training; a failing fold
    /// still lets the remaining folds train, and the mask scores 0.
    pub fn evaluate(&self, mask: &AttributeMask, counter: &TrainingCounter) -> f64 {
        if mask.count() == 0 {
            return 0.0;
        }
        let mut sum = 0.0;
        let mut failed = false;
        for (k, p) in self.problems.iter().enumerate() {
            match p.accuracy(mask, counter) {
                Ok(a) => sum += a,
                Err(e) => {
                    log::warn!("fitness of mask {mask} failed on fold {k}: {e}");
                    failed = true;
                }
            }
        }
        if failed {
            0.0
        } else {
            sum / self.problems.len() as f64
        }
    }
}

/// Memoised fitness keyed by mask bits.
#[derive(Debug, Clone)]
pub struct FitnessCache {
    map: HashMap<AttributeMask, f64>,
    hits: u64,
    misses: u64,
}

impl FitnessCache {
    /// The empty mask is pre-seeded with fitness 0.
    pub fn new(n_attributes: usize) -> Self {
        let mut map = HashMap::new();
        map.insert(AttributeMask::zeros(n_attributes), 0.0);
        Self { map, hits: 0, misses: 0 }
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, mask: &AttributeMask) -> Option<f64> {
        self.map.get(mask).copied()
    }

    /// Fitness for each mask, in order. Repeats within the batch and masks
    /// already cached count as hits; each distinct new mask is one miss and is
    /// evaluated exactly once, possibly in parallel.
    pub fn evaluate_batch(
        &mut self,
        ctx: &FitnessContext,
        masks: &[AttributeMask],
        counter: &TrainingCounter,
    ) -> Vec<f64> {
        let mut pending: Vec<AttributeMask> = Vec::new();
        let mut queued: HashSet<&AttributeMask> = HashSet::new();
        for m in masks {
            if self.map.contains_key(m) || queued.contains(m) {
                self.hits += 1;
            } else {
                queued.insert(m);
                pending.push(m.clone());
                self.misses += 1;
            }
        }
        let values = par::map_collect(&pending, |m| ctx.evaluate(m, counter));
        for (m, v) in pending.into_iter().zip(values) {
            self.map.insert(m, v);
        }
        masks.iter().map(|m| self.map[m]).collect()
    }
}

pub fn fitness(
    mask: &AttributeMask,
    ctx: &FitnessContext,
    cache: &mut FitnessCache,
    counter: &TrainingCounter,
) -> f64 {
    cache.evaluate_batch(ctx, std::slice::from_ref(mask), counter)[0]
}
