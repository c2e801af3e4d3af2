//! Linear semantic autoencoder with tied weights.
//!
//! Training minimises `‖X − WᵀS‖² + λ‖WX − S‖²`, whose stationarity condition is
//! the Sylvester equation `SSᵀW + λWXXᵀ = (1+λ)SXᵀ`. Prediction encodes a visual
//! vector with `W` and returns the prototype at the smallest cosine distance.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{SemanticSpace, VisualSet};
use crate::error::{Error, Result};
use crate::io;
use crate::sylvester::solve_sylvester;

pub const DEFAULT_LAMBDA: f64 = 500_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// Mean over instances.
    #[default]
    PerInstance,
    /// Mean over classes of per-class instance accuracy.
    PerClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaeModel {
    /// Semantic dim × visual dim.
    pub w: DMatrix<f64>,
    pub lambda: f64,
}

/// Stacks the prototype of each instance's class as a column: `L × M`.
pub fn expand_prototypes(semantics: &SemanticSpace, visual: &VisualSet) -> Result<DMatrix<f64>> {
    let index: HashMap<&str, usize> =
        semantics.class_ids().iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let m = semantics.matrix();
    let mut s = DMatrix::zeros(m.ncols(), visual.len());
    for (i, label) in visual.labels().iter().enumerate() {
        let row = *index.get(label.as_str()).ok_or_else(|| Error::UnknownLabel {
            label: label.clone(),
            context: "training semantics".into(),
        })?;
        s.set_column(i, &m.row(row).transpose());
    }
    Ok(s)
}

/// `A = SSᵀ`, `B = λXXᵀ`, `C = (1+λ)SXᵀ` for the training problem.
pub fn normal_equation_terms(
    semantics: &SemanticSpace,
    visual: &VisualSet,
    lambda: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let s = expand_prototypes(semantics, visual)?;
    let x = visual.features();
    let a = &s * s.transpose();
    let gram = x.tr_mul(x);
    let b = (&gram + gram.transpose()) * (0.5 * lambda);
    let c = (&s * x) * (1.0 + lambda);
    Ok(((&a + a.transpose()) * 0.5, b, c))
}

pub fn train_sae(semantics: &SemanticSpace, visual: &VisualSet, lambda: f64) -> Result<SaeModel> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    let (a, b, c) = normal_equation_terms(semantics, visual, lambda)?;
    let w = solve_sylvester(&a, &b, &c)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue("trained projection".into()));
    }
    Ok(SaeModel { w, lambda })
}

impl SaeModel {
    pub fn encode(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.w * x
    }

    /// Objective value `‖X − WᵀS‖² + λ‖WX − S‖²`, with `X` as `D × M` and `S` as `L × M`.
    pub fn objective(w: &DMatrix<f64>, x: &DMatrix<f64>, s: &DMatrix<f64>, lambda: f64) -> f64 {
        (x - w.tr_mul(s)).norm_squared() + lambda * (w * x - s).norm_squared()
    }

    pub fn save(&self, bin_path: &Path, attribute_names: &[String]) -> Result<()> {
        io::write_atomic(bin_path, &io::encode_matrix(&self.w, attribute_names))?;
        let sidecar = bin_path.with_extension("json");
        io::write_json(&sidecar, &serde_json::json!({ "lambda": self.lambda }))
    }

    pub fn load(bin_path: &Path) -> Result<(SaeModel, Vec<String>)> {
        let bytes = std::fs::read(bin_path).map_err(|e| Error::io(bin_path, e))?;
        let m = io::decode_matrix(&bytes, bin_path)?;
        let sidecar: serde_json::Value = io::read_json(&bin_path.with_extension("json"))?;
        let lambda = sidecar["lambda"]
            .as_f64()
            .ok_or_else(|| Error::InvalidConfig("model sidecar lacks lambda".into()))?;
        Ok((SaeModel { w: m.matrix, lambda }, m.labels))
    }
}

/// Index of the smallest cosine distance between `embedding` and each row of
/// `prototypes`. Ties go to the lowest row; zero vectors are at distance 1.
pub fn nearest_by_cosine(embedding: &[f64], prototypes: &DMatrix<f64>, proto_norms: &[f64]) -> usize {
    let e_norm = embedding.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (r, &p_norm) in proto_norms.iter().enumerate() {
        let d = if e_norm == 0.0 || p_norm == 0.0 {
            1.0
        } else {
            let dot: f64 = embedding.iter().enumerate().map(|(j, v)| v * prototypes[(r, j)]).sum();
            1.0 - dot / (e_norm * p_norm)
        };
        if d < best_d {
            best_d = d;
            best = r;
        }
    }
    best
}

pub fn row_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().map(|r| r.norm()).collect()
}

/// Per-instance (`PerInstance`) or class-macro (`PerClass`) accuracy from
/// predicted and true class indices.
pub fn score(predicted: &[usize], truth: &[usize], mode: AccuracyMode) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    match mode {
        AccuracyMode::PerInstance => {
            let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
            Ok(hits as f64 / truth.len() as f64)
        }
        AccuracyMode::PerClass => {
            let n_classes = truth.iter().max().map_or(0, |m| m + 1);
            let mut hits = vec![0usize; n_classes];
            let mut totals = vec![0usize; n_classes];
            for (p, &t) in predicted.iter().zip(truth) {
                totals[t] += 1;
                hits[t] += usize::from(*p == t);
            }
            let (sum, present) = hits
                .iter()
                .zip(&totals)
                .filter(|(_, &n)| n > 0)
                .fold((0.0, 0usize), |(s, k), (&h, &n)| (s + h as f64 / n as f64, k + 1));
            Ok(sum / present as f64)
        }
    }
}

/// Trained model plus the candidate class prototypes it predicts among.
#[derive(Debug, Clone)]
pub struct SaePredictor {
    model: SaeModel,
    prototypes: SemanticSpace,
    norms: Vec<f64>,
}

impl SaePredictor {
    pub fn new(model: SaeModel, prototypes: SemanticSpace) -> Result<Self> {
        if prototypes.n_attributes() != model.w.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "prototypes have {} attributes, model projects to {}",
                prototypes.n_attributes(),
                model.w.nrows()
            )));
        }
        let norms = row_norms(prototypes.matrix());
        Ok(Self { model, prototypes, norms })
    }

    pub fn model(&self) -> &SaeModel {
        &self.model
    }

    pub fn prototypes(&self) -> &SemanticSpace {
        &self.prototypes
    }

    pub fn predict_index(&self, x: &DVector<f64>) -> usize {
        let e = self.model.encode(x);
        if e.iter().all(|&v| v == 0.0) {
            log::warn!("zero embedding; falling back to the first candidate class");
        }
        nearest_by_cosine(e.as_slice(), self.prototypes.matrix(), &self.norms)
    }

    pub fn predict(&self, x: &DVector<f64>) -> &str {
        &self.prototypes.class_ids()[self.predict_index(x)]
    }

    /// Predicted candidate index for every row of `features`.
    pub fn predict_batch(&self, features: &DMatrix<f64>) -> Vec<usize> {
        let emb = &self.model.w * features.transpose();
        emb.column_iter()
            .map(|c| nearest_by_cosine(c.as_slice(), self.prototypes.matrix(), &self.norms))
            .collect()
    }

    pub fn accuracy(&self, eval: &VisualSet, mode: AccuracyMode) -> Result<f64> {
        if eval.is_empty() {
            return Err(Error::EmptyEvalSet);
        }
        if eval.dim() != self.model.w.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "eval features have {} dims, model expects {}",
                eval.dim(),
                self.model.w.ncols()
            )));
        }
        let truth = eval
            .labels()
            .iter()
            .map(|l| {
                self.prototypes.class_index(l).ok_or_else(|| Error::UnknownLabel {
                    label: l.clone(),
                    context: "candidate classes".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        score(&self.predict_batch(eval.features()), &truth, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AttributeMask;
    use crate::seed::rng_from;
    use rand::Rng;

    fn space(ids: &[&str], m: DMatrix<f64>) -> SemanticSpace {
        SemanticSpace::new(
            ids.iter().map(|s| s.to_string()).collect(),
            (0..m.ncols()).map(|j| format!("a{j}")).collect(),
            m,
        )
        .unwrap()
    }

    #[test]
    fn identity_training_problem() {
        let s = space(&["p", "q"], DMatrix::identity(2, 2));
        let x = VisualSet::new(DMatrix::identity(2, 2), vec!["p".into(), "q".into()]).unwrap();
        let m = train_sae(&s, &x, 1.0).unwrap();
        assert!((m.w - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
    }

    fn toy_problem(seed: u64, classes: usize, per_class: usize, l: usize, d: usize) -> (SemanticSpace, VisualSet) {
        let mut rng = rng_from(seed);
        let ids: Vec<String> = (0..classes).map(|c| format!("c{c}")).collect();
        let protos = DMatrix::from_fn(classes, l, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<String> = (0..classes * per_class).map(|i| ids[i % classes].clone()).collect();
        let feats = DMatrix::from_fn(labels.len(), d, |_, _| rng.random_range(-1.0..1.0));
        let s = SemanticSpace::new(ids, (0..l).map(|j| format!("a{j}")).collect(), protos).unwrap();
        (s, VisualSet::new(feats, labels).unwrap())
    }

    #[test]
    fn trained_projection_is_a_local_minimum() {
        let (s, x) = toy_problem(3, 5, 6, 4, 7);
        let lambda = DEFAULT_LAMBDA;
        let model = train_sae(&s, &x, lambda).unwrap();
        let smat = expand_prototypes(&s, &x).unwrap();
        let xmat = x.features().transpose();
        let base = SaeModel::objective(&model.w, &xmat, &smat, lambda);
        let mut rng = rng_from(99);
        for _ in 0..20 {
            let dir = DMatrix::from_fn(4, 7, |_, _| rng.random_range(-1.0..1.0));
            let dir = dir.clone() / dir.norm() * 1e-3;
            for sign in [1.0, -1.0] {
                let w = &model.w + &dir * sign;
                assert!(SaeModel::objective(&w, &xmat, &smat, lambda) >= base * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn restricted_training_is_not_a_row_slice() {
        let (s, x) = toy_problem(8, 6, 5, 5, 9);
        let full = train_sae(&s, &x, 2.0).unwrap();
        let mask = AttributeMask::from_bits(vec![true, false, true, true, false]);
        let restricted = train_sae(&s.restrict(&mask).unwrap(), &x, 2.0).unwrap();
        let sliced = full.w.select_rows(&mask.indices());
        assert!((restricted.w.clone() - sliced).abs().max() > 1e-6);
        let (a, b, c) = normal_equation_terms(&s.restrict(&mask).unwrap(), &x, 2.0).unwrap();
        assert!(crate::sylvester::relative_residual(&a, &b, &c, &restricted.w) <= 1e-8);
    }

    #[test]
    fn prediction_cases() {
        let model = SaeModel { w: DMatrix::identity(2, 2), lambda: 1.0 };
        let p = SaePredictor::new(model, space(&["one", "two"], DMatrix::identity(2, 2))).unwrap();
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(p.predict(&e2), "two");
        assert_eq!(p.predict(&(e2 * 10.0)), "two");
        assert_eq!(p.predict(&DVector::from_vec(vec![1.0, 0.0])), "one");
        // zero embedding and exact ties resolve to the first row
        assert_eq!(p.predict(&DVector::from_vec(vec![0.0, 0.0])), "one");
        assert_eq!(p.predict(&DVector::from_vec(vec![1.0, 1.0])), "one");
    }

    #[test]
    fn zero_prototype_is_maximally_distant() {
        let model = SaeModel { w: DMatrix::identity(2, 2), lambda: 1.0 };
        let protos = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -1.0, 0.1]);
        let p = SaePredictor::new(model, space(&["zero", "far"], protos)).unwrap();
        // cosine to "far" is ~ -0.99, distance ~1.99 > 1
        assert_eq!(p.predict(&DVector::from_vec(vec![1.0, 0.0])), "zero");
        assert_eq!(p.predict(&DVector::from_vec(vec![-1.0, 0.0])), "far");
    }

    #[test]
    fn accuracy_modes() {
        assert_eq!(score(&[0, 1, 2], &[0, 1, 2], AccuracyMode::PerInstance).unwrap(), 1.0);
        assert!((score(&[0, 0, 0], &[0, 1, 2], AccuracyMode::PerInstance).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(score(&[0, 0, 0, 0], &[0, 0, 1, 1], AccuracyMode::PerClass).unwrap(), 0.5);
        assert!(matches!(score(&[], &[], AccuracyMode::PerClass), Err(Error::EmptyEvalSet)));
        // one instance per class: both modes agree
        let p = [0, 2, 2, 3];
        let t = [0, 1, 2, 3];
        assert_eq!(
            score(&p, &t, AccuracyMode::PerInstance).unwrap(),
            score(&p, &t, AccuracyMode::PerClass).unwrap()
        );
    }

    #[test]
    fn predictor_accuracy_rejects_unknown_labels() {
        let model = SaeModel { w: DMatrix::identity(2, 2), lambda: 1.0 };
        let p = SaePredictor::new(model, space(&["one", "two"], DMatrix::identity(2, 2))).unwrap();
        let eval = VisualSet::new(DMatrix::identity(2, 2), vec!["one".into(), "three".into()]).unwrap();
        assert!(matches!(p.accuracy(&eval, AccuracyMode::PerInstance), Err(Error::UnknownLabel { .. })));
        let eval = VisualSet::new(DMatrix::identity(2, 2), vec!["one".into(), "two".into()]).unwrap();
        assert_eq!(p.accuracy(&eval, AccuracyMode::PerInstance).unwrap(), 1.0);
    }

    #[test]
    fn model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let model = SaeModel { w: DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.5]), lambda: 500000.0 };
        let path = dir.path().join("model.bin");
        model.save(&path, &["x".into(), "y".into()]).unwrap();
        let (back, names) = SaeModel::load(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(names, vec!["x", "y"]);
    }
}
