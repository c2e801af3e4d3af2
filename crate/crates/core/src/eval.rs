//! Mask evaluation for a fixed train/validation split.
//!
//! Attribute masks only change the semantic side of the Sylvester system, so
//! everything that depends on the visual side is computed once per split:
//! the eigendecomposition of `λXXᵀ`, per-class feature sums rotated into its
//! eigenbasis, and the rotated validation features. Each mask then costs one
//! `L × L` eigendecomposition plus `O(L·D·(n + M))` products.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;

use crate::data::{AttributeMask, SemanticSpace, VisualSet, ZslBundle};
use crate::error::{Error, Result};
use crate::sae::{nearest_by_cosine, row_norms, score, train_sae, AccuracyMode, SaeModel, SaePredictor};
use crate::sylvester::{solve_rotated, SymmetricFactor};

/// Counts SAE solves at the solver boundary.
#[derive(Debug, Default)]
pub struct TrainingCounter(AtomicU64);

impl TrainingCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaeSettings {
    pub lambda: f64,
    pub accuracy: AccuracyMode,
}

impl Default for SaeSettings {
    fn default() -> Self {
        Self { lambda: crate::sae::DEFAULT_LAMBDA, accuracy: AccuracyMode::PerInstance }
    }
}

/// One train/validation split prepared for repeated mask evaluation.
#[derive(Debug, Clone)]
pub struct SplitProblem {
    settings: SaeSettings,
    visual: SymmetricFactor,
    /// Training prototypes over all attributes (n_train_classes × N).
    train_protos: DMatrix<f64>,
    counts: Vec<f64>,
    /// Per-class feature sums times the visual eigenvectors (n_train_classes × D).
    class_sums_rot: DMatrix<f64>,
    val_protos: DMatrix<f64>,
    /// Visual eigenvectorsᵀ × validation features (D × M_val).
    val_rot: DMatrix<f64>,
    val_truth: Vec<usize>,
}

fn class_indices(space: &SemanticSpace, set: &VisualSet, what: &str) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> =
        space.class_ids().iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    set.labels()
        .iter()
        .map(|l| {
            index.get(l.as_str()).copied().ok_or_else(|| Error::UnknownLabel {
                label: l.clone(),
                context: what.to_string(),
            })
        })
        .collect()
}

impl SplitProblem {
    pub fn new(
        train: &VisualSet,
        train_semantics: &SemanticSpace,
        val: &VisualSet,
        val_semantics: &SemanticSpace,
        settings: SaeSettings,
    ) -> Result<Self> {
        if !(settings.lambda > 0.0 && settings.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {}", settings.lambda)));
        }
        if train.dim() != val.dim() {
            return Err(Error::DimensionMismatch("train and validation feature widths differ".into()));
        }
        if train_semantics.n_attributes() != val_semantics.n_attributes() {
            return Err(Error::DimensionMismatch("train and validation prototype widths differ".into()));
        }
        let train_idx = class_indices(train_semantics, train, "training semantics")?;
        let val_truth = class_indices(val_semantics, val, "validation semantics")?;
        let x = train.features();
        let gram = x.tr_mul(x);
        let b = (&gram + gram.transpose()) * (0.5 * settings.lambda);
        let visual = SymmetricFactor::new_unchecked(b);

        let n_classes = train_semantics.n_classes();
        let mut counts = vec![0.0; n_classes];
        let mut sums = DMatrix::zeros(n_classes, x.ncols());
        for (i, &c) in train_idx.iter().enumerate() {
            counts[c] += 1.0;
            let mut row = sums.row_mut(c);
            row += x.row(i);
        }
        Ok(Self {
            settings,
            class_sums_rot: sums * &visual.vectors,
            val_rot: visual.vectors.tr_mul(&val.features().transpose()),
            visual,
            train_protos: train_semantics.matrix().clone(),
            counts,
            val_protos: val_semantics.matrix().clone(),
            val_truth,
        })
    }

    pub fn n_attributes(&self) -> usize {
        self.train_protos.ncols()
    }

    pub fn settings(&self) -> SaeSettings {
        self.settings
    }

    /// Returns the semantic-side eigenvectors and `UᵀWV`.
    fn solve(&self, cols: &[usize]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let p = self.train_protos.select_columns(cols);
        let mut weighted = p.clone();
        for (r, &n) in self.counts.iter().enumerate() {
            let mut row = weighted.row_mut(r);
            row *= n;
        }
        let a = weighted.tr_mul(&p);
        let semantic = SymmetricFactor::new_unchecked((&a + a.transpose()) * 0.5);
        let c_rot = p.tr_mul(&self.class_sums_rot) * (1.0 + self.settings.lambda);
        let rotated = semantic.vectors.tr_mul(&c_rot);
        let norm = rotated.norm();
        let core = solve_rotated(&semantic, &self.visual, rotated, norm)?;
        Ok((semantic.vectors, core))
    }

    fn columns(&self, mask: &AttributeMask) -> Result<Vec<usize>> {
        mask.check_len(self.n_attributes())?;
        let cols = mask.indices();
        if cols.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(cols)
    }

    /// Trains on the masked training prototypes and scores the validation set.
    pub fn accuracy(&self, mask: &AttributeMask, counter: &TrainingCounter) -> Result<f64> {
        let cols = self.columns(mask)?;
        counter.bump();
        let (u, core) = self.solve(&cols)?;
        let emb = u * (core * &self.val_rot);
        if emb.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("validation embeddings".into()));
        }
        let protos = self.val_protos.select_columns(&cols);
        let norms = row_norms(&protos);
        let predicted: Vec<usize> =
            emb.column_iter().map(|c| nearest_by_cosine(c.as_slice(), &protos, &norms)).collect();
        score(&predicted, &self.val_truth, self.settings.accuracy)
    }

    /// The explicit projection `W` for a mask.
    pub fn train(&self, mask: &AttributeMask, counter: &TrainingCounter) -> Result<SaeModel> {
        let cols = self.columns(mask)?;
        counter.bump();
        let (u, core) = self.solve(&cols)?;
        Ok(SaeModel { w: u * core * self.visual.vectors.transpose(), lambda: self.settings.lambda })
    }
}

/// Retrains on every seen class with the masked semantics and scores the
/// unseen test set. This is the only place test data is touched.
pub fn unseen_accuracy(
    bundle: &ZslBundle,
    mask: &AttributeMask,
    settings: SaeSettings,
    counter: &TrainingCounter,
) -> Result<(f64, SaeModel)> {
    let seen = bundle.seen_data();
    let semantics = seen.semantics.restrict(mask)?;
    counter.bump();
    let model = train_sae(&semantics, &seen.train, settings.lambda)?;
    let predictor = SaePredictor::new(model, bundle.unseen_semantics().restrict(mask)?)?;
    let acc = predictor.accuracy(&bundle.test, settings.accuracy)?;
    Ok((acc, predictor.model().clone()))
}
