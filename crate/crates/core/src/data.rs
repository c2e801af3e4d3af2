//! Dataset model: class prototypes, visual feature sets, class splits and attribute masks.

use std::collections::{HashMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-class prototype matrix: one row per class, one column per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticSpace {
    class_ids: Vec<String>,
    attribute_names: Vec<String>,
    matrix: DMatrix<f64>,
}

impl SemanticSpace {
    pub fn new(
        class_ids: Vec<String>,
        attribute_names: Vec<String>,
        matrix: DMatrix<f64>,
    ) -> Result<Self> {
        if matrix.ncols() == 0 || attribute_names.is_empty() {
            return Err(Error::DimensionMismatch("semantic space needs at least one attribute".into()));
        }
        if attribute_names.len() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} attribute names for {} prototype columns",
                attribute_names.len(),
                matrix.ncols()
            )));
        }
        if class_ids.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} class ids for {} prototype rows",
                class_ids.len(),
                matrix.nrows()
            )));
        }
        let mut seen = HashSet::with_capacity(class_ids.len());
        for id in &class_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateClassId(id.clone()));
            }
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("semantic prototypes".into()));
        }
        for (r, id) in class_ids.iter().enumerate() {
            if matrix.row(r).iter().all(|&v| v == 0.0) {
                log::warn!("class {id:?} has an all-zero prototype");
            }
        }
        Ok(Self { class_ids, attribute_names, matrix })
    }

    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_classes(&self) -> usize {
        self.class_ids.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn class_index(&self, id: &str) -> Option<usize> {
        self.class_ids.iter().position(|c| c == id)
    }

    /// Keeps the masked columns, in original order.
    pub fn restrict(&self, mask: &AttributeMask) -> Result<SemanticSpace> {
        mask.check_len(self.n_attributes())?;
        let cols = mask.indices();
        if cols.is_empty() {
            return Err(Error::EmptyMask);
        }
        let matrix = self.matrix.select_columns(&cols);
        let names = cols.iter().map(|&c| self.attribute_names[c].clone()).collect();
        Ok(SemanticSpace { class_ids: self.class_ids.clone(), attribute_names: names, matrix })
    }

    /// Rows for the given classes, in the order given.
    pub fn select_classes<S: AsRef<str>>(&self, ids: &[S]) -> Result<SemanticSpace> {
        let index: HashMap<&str, usize> =
            self.class_ids.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let rows = ids
            .iter()
            .map(|id| {
                index.get(id.as_ref()).copied().ok_or_else(|| Error::UnknownLabel {
                    label: id.as_ref().to_string(),
                    context: "semantic space".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SemanticSpace::new(
            ids.iter().map(|s| s.as_ref().to_string()).collect(),
            self.attribute_names.clone(),
            self.matrix.select_rows(&rows),
        )
    }

    pub fn with_normalized_rows(&self) -> SemanticSpace {
        SemanticSpace { matrix: normalize_rows(&self.matrix), ..self.clone() }
    }
}

/// Instance features (rows) with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualSet {
    features: DMatrix<f64>,
    labels: Vec<String>,
}

impl VisualSet {
    pub fn new(features: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::DimensionMismatch("visual set has no instances".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::DimensionMismatch("visual features have zero width".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.nrows()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("visual features".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Instances whose label is in `classes`, preserving order. Errors if nothing matches.
    pub fn select_classes<S: AsRef<str>>(&self, classes: &[S]) -> Result<VisualSet> {
        let keep: HashSet<&str> = classes.iter().map(|s| s.as_ref()).collect();
        let rows: Vec<usize> =
            (0..self.len()).filter(|&i| keep.contains(self.labels[i].as_str())).collect();
        VisualSet::new(
            self.features.select_rows(&rows),
            rows.iter().map(|&i| self.labels[i].clone()).collect(),
        )
    }

    pub fn with_normalized_rows(&self) -> VisualSet {
        VisualSet { features: normalize_rows(&self.features), labels: self.labels.clone() }
    }

    /// Same labels, features replaced by zeros.
    pub fn zeroed(&self) -> VisualSet {
        VisualSet {
            features: DMatrix::zeros(self.features.nrows(), self.features.ncols()),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSplit {
    pub seen: Vec<String>,
    pub unseen: Vec<String>,
}

/// Seen-class data only: what selection methods are allowed to look at.
#[derive(Debug, Clone)]
pub struct SeenData {
    /// Seen-class prototypes in semantic file order.
    pub semantics: SemanticSpace,
    pub train: VisualSet,
}

#[derive(Debug, Clone)]
pub struct ZslBundle {
    pub semantics: SemanticSpace,
    pub train: VisualSet,
    pub test: VisualSet,
    pub split: ClassSplit,
}

impl ZslBundle {
    pub fn new(
        semantics: SemanticSpace,
        train: VisualSet,
        test: VisualSet,
        split: ClassSplit,
    ) -> Result<Self> {
        if split.seen.is_empty() || split.unseen.is_empty() {
            return Err(Error::InvalidSplit("seen and unseen sets must be non-empty".into()));
        }
        let seen: HashSet<&str> = split.seen.iter().map(String::as_str).collect();
        let unseen: HashSet<&str> = split.unseen.iter().map(String::as_str).collect();
        if seen.len() != split.seen.len() || unseen.len() != split.unseen.len() {
            return Err(Error::InvalidSplit("duplicate class in split".into()));
        }
        if let Some(c) = seen.intersection(&unseen).next() {
            return Err(Error::InvalidSplit(format!("class {c:?} is both seen and unseen")));
        }
        for c in seen.iter().chain(unseen.iter()) {
            if semantics.class_index(c).is_none() {
                return Err(Error::UnknownLabel { label: c.to_string(), context: "split".into() });
            }
        }
        if train.dim() != test.dim() {
            return Err(Error::DimensionMismatch(format!(
                "train features have {} dims, test features {}",
                train.dim(),
                test.dim()
            )));
        }
        for (set, allowed, name) in [(&train, &seen, "train"), (&test, &unseen, "test")] {
            for label in set.labels() {
                if semantics.class_index(label).is_none() {
                    return Err(Error::UnknownLabel { label: label.clone(), context: name.into() });
                }
                if !allowed.contains(label.as_str()) {
                    return Err(Error::InvalidSplit(format!(
                        "{name} label {label:?} is outside its class split"
                    )));
                }
            }
        }
        Ok(Self { semantics, train, test, split })
    }

    pub fn n_attributes(&self) -> usize {
        self.semantics.n_attributes()
    }

    /// Seen class ids in semantic file order.
    pub fn seen_classes(&self) -> Vec<String> {
        self.ordered(&self.split.seen)
    }

    pub fn unseen_classes(&self) -> Vec<String> {
        self.ordered(&self.split.unseen)
    }

    fn ordered(&self, set: &[String]) -> Vec<String> {
        let set: HashSet<&str> = set.iter().map(String::as_str).collect();
        self.semantics.class_ids().iter().filter(|c| set.contains(c.as_str())).cloned().collect()
    }

    pub fn seen_data(&self) -> SeenData {
        let semantics = self
            .semantics
            .select_classes(&self.seen_classes())
            .expect("seen classes validated at construction");
        SeenData { semantics, train: self.train.clone() }
    }

    pub fn unseen_semantics(&self) -> SemanticSpace {
        self.semantics
            .select_classes(&self.unseen_classes())
            .expect("unseen classes validated at construction")
    }

    /// Applies the optional row normalisations to prototypes and/or features.
    pub fn normalized(&self, prototypes: bool, features: bool) -> ZslBundle {
        let mut out = self.clone();
        if prototypes {
            out.semantics = out.semantics.with_normalized_rows();
        }
        if features {
            out.train = out.train.with_normalized_rows();
            out.test = out.test.with_normalized_rows();
        }
        out
    }
}

/// Binary selection over the attributes of a semantic space.
/// Serialized as a `0`/`1` string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct AttributeMask {
    bits: Vec<bool>,
}

impl AttributeMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn ones(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![false; n];
        for i in indices {
            bits[i] = true;
        }
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.bits.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: self.bits.len() });
        }
        Ok(())
    }

    pub fn and(&self, other: &AttributeMask) -> Result<AttributeMask> {
        other.check_len(self.len())?;
        Ok(Self { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect() })
    }

    /// Lifts a mask over the selected columns of `self` back to the full attribute index space.
    pub fn expand(&self, inner: &AttributeMask) -> Result<AttributeMask> {
        let selected = self.indices();
        inner.check_len(selected.len())?;
        Ok(Self::from_indices(
            self.len(),
            selected.iter().zip(inner.bits()).filter(|(_, &b)| b).map(|(&i, _)| i),
        ))
    }
}

impl fmt::Display for AttributeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl From<AttributeMask> for String {
    fn from(m: AttributeMask) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for AttributeMask {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid mask character {other:?}")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(AttributeMask::from_bits)
    }
}

/// Rescales every nonzero row to unit Euclidean norm; zero rows pass through.
pub fn normalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space(rows: usize, cols: usize, data: &[f64]) -> SemanticSpace {
        SemanticSpace::new(
            (0..rows).map(|i| format!("c{i}")).collect(),
            (0..cols).map(|j| format!("a{j}")).collect(),
            DMatrix::from_row_slice(rows, cols, data),
        )
        .unwrap()
    }

    #[test]
    fn restrict_keeps_selected_columns_in_order() {
        let s = space(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let r = s.restrict(&AttributeMask::from_bits(vec![true, false, true, false])).unwrap();
        assert_eq!(r.matrix(), &DMatrix::from_row_slice(2, 2, &[1., 3., 5., 7.]));
        assert_eq!(r.attribute_names(), &["a0".to_string(), "a2".to_string()]);
    }

    #[test]
    fn restrict_identity_and_errors() {
        let s = space(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        assert_eq!(s.restrict(&AttributeMask::ones(4)).unwrap(), s);
        assert!(matches!(s.restrict(&AttributeMask::zeros(4)), Err(Error::EmptyMask)));
        assert!(matches!(
            s.restrict(&AttributeMask::ones(3)),
            Err(Error::LengthMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn normalize_rows_cases() {
        let m = DMatrix::from_row_slice(3, 2, &[3., 4., 0., 0., 1., 0.]);
        let n = normalize_rows(&m);
        assert_eq!(n, DMatrix::from_row_slice(3, 2, &[0.6, 0.8, 0., 0., 1., 0.]));
    }

    #[test]
    fn semantic_space_rejects_bad_shapes() {
        let bad = SemanticSpace::new(
            vec!["a".into()],
            vec!["x".into(); 4],
            DMatrix::zeros(1, 5),
        );
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
        let dup = SemanticSpace::new(
            vec!["a".into(), "a".into()],
            vec!["x".into()],
            DMatrix::zeros(2, 1),
        );
        assert!(matches!(dup, Err(Error::DuplicateClassId(_))));
        let nan = SemanticSpace::new(
            vec!["a".into()],
            vec!["x".into()],
            DMatrix::from_element(1, 1, f64::NAN),
        );
        assert!(matches!(nan, Err(Error::NonFiniteValue(_))));
    }

    #[test]
    fn mask_expand_lifts_inner_selection() {
        let outer = AttributeMask::from_bits(vec![true, false, true, true]);
        let inner = AttributeMask::from_bits(vec![false, true, true]);
        assert_eq!(outer.expand(&inner).unwrap().bits(), &[false, false, true, true]);
    }

    proptest! {
        #[test]
        fn normalize_rows_is_idempotent(data in proptest::collection::vec(-50.0f64..50.0, 12)) {
            let m = DMatrix::from_row_slice(4, 3, &data);
            let once = normalize_rows(&m);
            let twice = normalize_rows(&once);
            prop_assert!((once - twice).abs().max() <= 1e-12);
        }

        #[test]
        fn restrict_composes_on_index_sets(
            outer in proptest::collection::vec(any::<bool>(), 6),
            inner_seed in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let s = space(3, 6, &(0..18).map(|v| v as f64).collect::<Vec<_>>());
            let m1 = AttributeMask::from_bits(outer);
            prop_assume!(m1.count() > 0);
            let inner = AttributeMask::from_bits(inner_seed[..m1.count()].to_vec());
            prop_assume!(inner.count() > 0);
            let lifted = m1.expand(&inner).unwrap();
            let lhs = s.restrict(&m1).unwrap().restrict(&inner).unwrap();
            let rhs = s.restrict(&m1.and(&lifted).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
