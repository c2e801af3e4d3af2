//! Random forest of Gini CART trees over prototype rows, used only for its
//! mean impurity-decrease importances. Every row is its own class.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::par;
use crate::seed;

struct Builder<'a> {
    x: &'a DMatrix<f64>,
    labels: &'a [usize],
    n_classes: usize,
    max_depth: Option<usize>,
    max_features: usize,
    total: f64,
    importance: Vec<f64>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Split {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn best_split(&self, samples: &[usize], parent: f64, rng: &mut seed::Rng) -> Option<Split> {
        let n = samples.len();
        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        features.shuffle(rng);
        let mut best: Option<Split> = None;
        let mut visited = 0;
        let mut sorted = samples.to_vec();
        for &f in &features {
            if visited >= self.max_features && best.is_some() {
                break;
            }
            sorted.sort_by(|&a, &b| self.x[(a, f)].total_cmp(&self.x[(b, f)]));
            let lo = self.x[(sorted[0], f)];
            let hi = self.x[(sorted[n - 1], f)];
            if lo == hi {
                continue;
            }
            visited += 1;
            let mut left = vec![0usize; self.n_classes];
            let mut right = vec![0usize; self.n_classes];
            for &s in &sorted {
                right[self.labels[s]] += 1;
            }
            for i in 0..n - 1 {
                let s = sorted[i];
                left[self.labels[s]] += 1;
                right[self.labels[s]] -= 1;
                let (v, next) = (self.x[(s, f)], self.x[(sorted[i + 1], f)]);
                if v == next {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                let child = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let decrease = parent - child;
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    best = Some(Split { feature: f, threshold: 0.5 * (v + next), decrease });
                }
            }
        }
        best
    }

    fn grow(&mut self, samples: &[usize], depth: usize, rng: &mut seed::Rng) {
        let n = samples.len();
        let mut counts = vec![0usize; self.n_classes];
        for &s in samples {
            counts[self.labels[s]] += 1;
        }
        let impurity = gini(&counts, n);
        if impurity == 0.0 || n < 2 || self.max_depth.is_some_and(|d| depth >= d) {
            return;
        }
        let Some(split) = self.best_split(samples, impurity, rng) else {
            return;
        };
        self.importance[split.feature] += n as f64 / self.total * split.decrease;
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&s| self.x[(s, split.feature)] <= split.threshold);
        self.grow(&left, depth + 1, rng);
        self.grow(&right, depth + 1, rng);
    }
}

fn tree_importance(
    x: &DMatrix<f64>,
    max_depth: Option<usize>,
    max_features: usize,
    seed: u64,
) -> Vec<f64> {
    let n = x.nrows();
    let mut rng = seed::rng_from(seed);
    let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let labels: Vec<usize> = (0..n).collect();
    let mut b = Builder {
        x,
        labels: &labels,
        n_classes: n,
        max_depth,
        max_features,
        total: n as f64,
        importance: vec![0.0; x.ncols()],
    };
    b.grow(&samples, 0, &mut rng);
    let sum: f64 = b.importance.iter().sum();
    if sum > 0.0 {
        b.importance.iter_mut().for_each(|v| *v /= sum);
    }
    b.importance
}

/// Mean per-tree normalised impurity decrease. Tree `t` draws from
/// `derive_seed(seed, [ranker tag, t])`, so trees can be built in any order.
pub fn forest_importance(
    x: &DMatrix<f64>,
    n_trees: usize,
    max_depth: Option<usize>,
    max_features: usize,
    seed: u64,
) -> Vec<f64> {
    let per_tree = par::map_range(n_trees, |t| {
        tree_importance(x, max_depth, max_features, seed::derive_seed(seed, &[seed::TAG_RANKER, t as u64]))
    });
    let mut out = vec![0.0; x.ncols()];
    for imp in &per_tree {
        for (o, v) in out.iter_mut().zip(imp) {
            *o += v;
        }
    }
    if n_trees > 0 {
        out.iter_mut().for_each(|v| *v /= n_trees as f64);
    }
    out
}
