//! Embedded attribute rankers fitted on class prototypes (one sample per class).

mod forest;
mod linear;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::SemanticSpace;
use crate::error::{Error, Result};
use crate::seed;

pub use forest::forest_importance;
pub use linear::{linear_importance, LinearLoss};

/// Attribute indices ordered by importance, most important first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

impl Ranking {
    /// Orders by descending score, ascending index on ties.
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { order, scores }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `rank,attribute_index,attribute_name,score`
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("rank,attribute_index,attribute_name,score\n");
        for (rank, &j) in self.order.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", rank + 1, j, names[j], self.scores[j]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankerKind {
    /// Sum over one-vs-rest linear models of |coefficient|, on standardised columns.
    LinearCoef {
        #[serde(default)]
        loss: LinearLoss,
        #[serde(default = "default_c")]
        c: f64,
    },
    /// Mean impurity decrease over a random forest.
    TreeImpurity {
        #[serde(default = "default_trees")]
        n_trees: usize,
        #[serde(default)]
        max_depth: Option<usize>,
        /// Features tried per split; `None` means `⌊√N⌋`.
        #[serde(default)]
        max_features: Option<usize>,
    },
    Random,
}

fn default_c() -> f64 {
    1.0
}

fn default_trees() -> usize {
    200
}

impl RankerKind {
    pub fn linear() -> Self {
        RankerKind::LinearCoef { loss: LinearLoss::Hinge, c: 1.0 }
    }

    pub fn forest() -> Self {
        RankerKind::TreeImpurity { n_trees: 200, max_depth: None, max_features: None }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RankerKind::LinearCoef { loss: LinearLoss::Hinge, .. } => "linear_coef-hinge",
            RankerKind::LinearCoef { loss: LinearLoss::Logistic, .. } => "linear_coef-logistic",
            RankerKind::TreeImpurity { .. } => "tree_impurity",
            RankerKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerSpec {
    #[serde(flatten)]
    pub kind: RankerKind,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RankerSpec {
    fn default() -> Self {
        Self { kind: RankerKind::linear(), seed: 0 }
    }
}

impl RankerSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { kind: self.kind.clone(), seed }
    }
}

/// Column means and population standard deviations; zero-variance columns
/// are reported and mapped to all-zero columns.
pub(crate) fn standardize(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<bool>) {
    let n = m.nrows() as f64;
    let mut out = m.clone();
    let mut constant = vec![false; m.ncols()];
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd <= 1e-12 * (1.0 + mean.abs()) {
            constant[j] = true;
            col.fill(0.0);
        } else {
            col.apply(|v| *v = (*v - mean) / sd);
        }
    }
    (out, constant)
}

pub fn rank_attributes(spec: &RankerSpec, semantics: &SemanticSpace) -> Result<Ranking> {
    if semantics.n_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let m = semantics.matrix();
    let (standardized, constant) = standardize(m);
    for (j, &c) in constant.iter().enumerate() {
        if c {
            log::warn!("attribute {:?} is constant across classes; scored 0", semantics.attribute_names()[j]);
        }
    }
    let mut scores = match &spec.kind {
        RankerKind::LinearCoef { loss, c } => linear_importance(&standardized, *loss, *c),
        RankerKind::TreeImpurity { n_trees, max_depth, max_features } => {
            let mf = max_features.unwrap_or_else(|| ((m.ncols() as f64).sqrt().floor() as usize).max(1));
            forest_importance(m, *n_trees, *max_depth, mf, spec.seed)
        }
        RankerKind::Random => {
            let mut order: Vec<usize> = (0..m.ncols()).collect();
            order.shuffle(&mut seed::rng_from(seed::derive_seed(spec.seed, &[seed::TAG_RANKER])));
            let mut scores = vec![0.0; m.ncols()];
            for (rank, &j) in order.iter().enumerate() {
                scores[j] = 1.0 / (rank + 1) as f64;
            }
            scores
        }
    };
    for (s, &c) in scores.iter_mut().zip(&constant) {
        if c {
            *s = 0.0;
        }
    }
    Ok(Ranking::from_scores(scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    fn space(m: DMatrix<f64>) -> SemanticSpace {
        SemanticSpace::new(
            (0..m.nrows()).map(|i| format!("c{i}")).collect(),
            (0..m.ncols()).map(|j| format!("a{j}")).collect(),
            m,
        )
        .unwrap()
    }

    fn all_kinds() -> Vec<RankerKind> {
        vec![
            RankerKind::linear(),
            RankerKind::LinearCoef { loss: LinearLoss::Logistic, c: 1.0 },
            RankerKind::TreeImpurity { n_trees: 30, max_depth: None, max_features: None },
            RankerKind::Random,
        ]
    }

    #[test]
    fn ties_break_by_index() {
        let r = Ranking::from_scores(vec![0.5, 1.0, 0.5, 0.0]);
        assert_eq!(r.order, vec![1, 0, 2, 3]);
    }

    /// Brute-force separability check: a single column separates the two
    /// classes iff their values differ.
    fn separating_columns(m: &DMatrix<f64>) -> Vec<usize> {
        (0..m.ncols()).filter(|&j| m[(0, j)] != m[(1, j)]).collect()
    }

    #[test]
    fn single_differing_attribute_ranks_first() {
        let m = DMatrix::from_row_slice(2, 5, &[0.2, 0.4, 0.1, 0.9, 0.3, 0.2, 0.4, 0.1, 0.1, 0.3]);
        assert_eq!(separating_columns(&m), vec![3]);
        let r = rank_attributes(&RankerSpec::default(), &space(m)).unwrap();
        assert_eq!(r.order[0], 3);
        assert!(r.scores[3] > 0.0);
    }

    #[test]
    fn constant_column_is_last_with_zero_score() {
        let mut rng = rng_from(4);
        let mut m = DMatrix::from_fn(6, 5, |_, _| rng.random_range(0.0..1.0));
        m.column_mut(1).fill(0.7);
        for kind in all_kinds() {
            let r = rank_attributes(&RankerSpec { kind: kind.clone(), seed: 3 }, &space(m.clone())).unwrap();
            assert_eq!(*r.order.last().unwrap(), 1, "{kind:?}");
            assert_eq!(r.scores[1], 0.0);
        }
    }

    #[test]
    fn random_ranker_is_seeded() {
        let m = DMatrix::from_fn(4, 12, |r, c| (r * 12 + c) as f64);
        let spec = RankerSpec { kind: RankerKind::Random, seed: 17 };
        let a = rank_attributes(&spec, &space(m.clone())).unwrap();
        let b = rank_attributes(&spec, &space(m.clone())).unwrap();
        assert_eq!(a, b);
        let c = rank_attributes(&spec.with_seed(18), &space(m)).unwrap();
        assert_ne!(a.order, c.order);
    }

    #[test]
    fn single_class_is_rejected() {
        let s = space(DMatrix::from_element(1, 3, 1.0));
        assert!(matches!(rank_attributes(&RankerSpec::default(), &s), Err(Error::SingleClass)));
    }

    #[test]
    fn csv_layout() {
        let r = Ranking::from_scores(vec![0.1, 0.3]);
        let csv = r.to_csv(&["x".into(), "y".into()]);
        assert_eq!(csv, "rank,attribute_index,attribute_name,score\n1,1,y,0.3\n2,0,x,0.1\n");
    }

    #[test]
    fn spec_json_shape() {
        let spec: RankerSpec = serde_json::from_str(r#"{"kind":"tree_impurity","n_trees":10,"seed":4}"#).unwrap();
        assert_eq!(spec.kind, RankerKind::TreeImpurity { n_trees: 10, max_depth: None, max_features: None });
        let spec: RankerSpec = serde_json::from_str(r#"{"kind":"linear_coef","loss":"logistic"}"#).unwrap();
        assert_eq!(spec.kind, RankerKind::LinearCoef { loss: LinearLoss::Logistic, c: 1.0 });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn rankings_are_sorted_permutations(seed in any::<u64>(), n in 2usize..8, p in 1usize..10, kind in 0usize..4) {
            let mut rng = rng_from(seed);
            let m = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
            let spec = RankerSpec { kind: all_kinds()[kind].clone(), seed };
            let r = rank_attributes(&spec, &space(m)).unwrap();
            let mut sorted = r.order.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..p).collect::<Vec<_>>());
            for w in r.order.windows(2) {
                prop_assert!(r.scores[w[0]] >= r.scores[w[1]]);
                if r.scores[w[0]] == r.scores[w[1]] {
                    prop_assert!(w[0] < w[1]);
                }
            }
            prop_assert!(r.scores.iter().all(|&s| s >= 0.0));
        }
    }
}
