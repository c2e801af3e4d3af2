//! Ranking-based selection: per fold, rank attributes on the pseudo-seen
//! prototypes, walk the ranking prefix by prefix scoring each on the
//! pseudo-unseen classes, keep the best prefix, then count how many folds
//! picked each attribute. Threshold `T_i` keeps attributes picked in at least
//! `i` folds.

use serde::{Deserialize, Serialize};

use crate::data::{AttributeMask, SeenData, ZslBundle};
use crate::error::{Error, Result};
use crate::eval::{unseen_accuracy, SaeSettings, SplitProblem, TrainingCounter};
use crate::par;
use crate::partition::{fold_views, FoldPlan};
use crate::rankers::{rank_attributes, RankerSpec, Ranking};
use crate::seed;

/// Default headline threshold.
pub const DEFAULT_THRESHOLD: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSelection {
    pub fold_index: usize,
    pub ranking: Ranking,
    /// Entry `i` is the validation accuracy of the top-`i+1` prefix; `None` when skipped by striding.
    pub prefix_accuracies: Vec<Option<f64>>,
    pub chosen_size: usize,
    pub chosen_mask: AttributeMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    pub frequency: Vec<usize>,
    /// `masks_by_threshold[i - 1]` is the mask for `T_i`.
    pub masks_by_threshold: Vec<AttributeMask>,
}

impl ConsensusResult {
    pub fn mask(&self, threshold: usize) -> Option<&AttributeMask> {
        threshold.checked_sub(1).and_then(|i| self.masks_by_threshold.get(i))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WalkOptions {
    /// Evaluate every `stride`-th prefix, then every prefix around the best one.
    pub stride: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RfsResult {
    pub folds: Vec<FoldSelection>,
    pub consensus: ConsensusResult,
}

/// Smallest prefix size with maximal accuracy.
pub fn choose_size(prefix_accuracies: &[Option<f64>]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, acc) in prefix_accuracies.iter().enumerate() {
        if let Some(a) = *acc {
            if a > best.1 {
                best = (i, a);
            }
        }
    }
    best.0 + 1
}

pub fn wrapper_walk(
    fold_index: usize,
    ranking: Ranking,
    problem: &SplitProblem,
    counter: &TrainingCounter,
    options: WalkOptions,
) -> Result<FoldSelection> {
    let n = ranking.len();
    let mut accs: Vec<Option<f64>> = vec![None; n];
    let eval = |size: usize, accs: &mut Vec<Option<f64>>| -> Result<()> {
        if accs[size - 1].is_none() {
            let mask = AttributeMask::from_indices(n, ranking.order[..size].iter().copied());
            accs[size - 1] = Some(problem.accuracy(&mask, counter)?);
        }
        Ok(())
    };
    match options.stride.filter(|&s| s > 1) {
        None => {
            for size in 1..=n {
                eval(size, &mut accs)?;
            }
        }
        Some(stride) => {
            for size in (stride..=n).step_by(stride).chain([1, n]) {
                eval(size, &mut accs)?;
            }
            let coarse = choose_size(&accs);
            let lo = coarse.saturating_sub(stride - 1).max(1);
            let hi = (coarse + stride - 1).min(n);
            for size in lo..=hi {
                eval(size, &mut accs)?;
            }
        }
    }
    let chosen_size = choose_size(&accs);
    let chosen_mask = AttributeMask::from_indices(n, ranking.order[..chosen_size].iter().copied());
    Ok(FoldSelection { fold_index, ranking, prefix_accuracies: accs, chosen_size, chosen_mask })
}

/// Attribute frequencies over fold masks and the nested threshold masks `T_1..T_k`.
pub fn consensus(fold_masks: &[AttributeMask], n_attributes: usize) -> ConsensusResult {
    let k = fold_masks.len();
    let mut frequency = vec![0usize; n_attributes];
    for m in fold_masks {
        for j in m.indices() {
            frequency[j] += 1;
        }
    }
    let masks_by_threshold = (1..=k)
        .map(|t| AttributeMask::from_bits(frequency.iter().map(|&f| f >= t).collect()))
        .collect();
    ConsensusResult { frequency, masks_by_threshold }
}

pub fn run_rfs(
    seen: &SeenData,
    plan: &FoldPlan,
    ranker: &RankerSpec,
    settings: SaeSettings,
    options: WalkOptions,
    counter: &TrainingCounter,
) -> Result<RfsResult> {
    let n = seen.semantics.n_attributes();
    let folds = par::map_range(plan.k, |k| -> Result<FoldSelection> {
        let view = fold_views(seen, plan, k)?;
        let spec = ranker.with_seed(seed::derive_seed(ranker.seed, &[seed::TAG_RANKER, k as u64]));
        let ranking = rank_attributes(&spec, &view.train_semantics)?;
        let problem = SplitProblem::new(&view.train, &view.train_semantics, &view.val, &view.val_semantics, settings)?;
        wrapper_walk(k, ranking, &problem, counter, options)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let masks: Vec<AttributeMask> = folds.iter().map(|f| f.chosen_mask.clone()).collect();
    Ok(RfsResult { consensus: consensus(&masks, n), folds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: usize,
    pub attribute_count: usize,
    pub unseen_accuracy: Option<f64>,
    pub note: Option<String>,
}

/// Retrains on all seen classes with each threshold mask and scores the unseen test set.
/// Empty masks yield a row with no accuracy and a note.
pub fn evaluate_thresholds(
    bundle: &ZslBundle,
    result: &ConsensusResult,
    settings: SaeSettings,
    counter: &TrainingCounter,
) -> Result<Vec<ThresholdRow>> {
    result
        .masks_by_threshold
        .iter()
        .enumerate()
        .map(|(i, mask)| {
            let threshold = i + 1;
            if mask.count() == 0 {
                return Ok(ThresholdRow {
                    threshold,
                    attribute_count: 0,
                    unseen_accuracy: None,
                    note: Some("no solution: empty mask".into()),
                });
            }
            match unseen_accuracy(bundle, mask, settings, counter) {
                Ok((acc, _)) => Ok(ThresholdRow {
                    threshold,
                    attribute_count: mask.count(),
                    unseen_accuracy: Some(acc),
                    note: None,
                }),
                Err(Error::EmptyMask) => unreachable!("checked above"),
                Err(e) => Err(e),
            }
        })
        .collect()
}
