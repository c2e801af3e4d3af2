//! Class-level K-fold plans: each fold splits the seen classes into pseudo-seen
//! (training) and pseudo-unseen (validation) groups.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{SeenData, SemanticSpace, VisualSet};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_K: usize = 5;

/// Class indices into [`FoldPlan::classes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub pseudo_seen: Vec<usize>,
    pub pseudo_unseen: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "FoldPlanWire", into = "FoldPlanWire")]
pub struct FoldPlan {
    /// Seen classes in the order the folds were cut from.
    pub classes: Vec<String>,
    pub folds: Vec<Fold>,
    pub k: usize,
    pub n: usize,
    /// `n / k`
    pub l: usize,
    /// `n % k`
    pub r: usize,
}

impl FoldPlan {
    pub fn pseudo_seen(&self, fold: usize) -> Vec<&str> {
        self.names(&self.folds[fold].pseudo_seen)
    }

    pub fn pseudo_unseen(&self, fold: usize) -> Vec<&str> {
        self.names(&self.folds[fold].pseudo_unseen)
    }

    fn names(&self, idx: &[usize]) -> Vec<&str> {
        idx.iter().map(|&i| self.class_name(i)).collect()
    }

    fn class_name(&self, i: usize) -> &str {
        self.classes.get(i).map_or("<unknown>", String::as_str)
    }
}

#[derive(Serialize, Deserialize)]
struct FoldWire {
    pseudo_seen: Vec<String>,
    pseudo_unseen: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FoldPlanWire {
    k: usize,
    folds: Vec<FoldWire>,
}

impl From<FoldPlanWire> for FoldPlan {
    fn from(w: FoldPlanWire) -> Self {
        // Interning pseudo-unseen before pseudo-seen, fold by fold, recovers the
        // original class order for plans cut from contiguous blocks.
        let mut classes = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |names: Vec<String>| -> Vec<usize> {
            names
                .into_iter()
                .map(|c| {
                    *index.entry(c).or_insert_with_key(|c| {
                        classes.push(c.clone());
                        classes.len() - 1
                    })
                })
                .collect()
        };
        let folds: Vec<Fold> = w
            .folds
            .into_iter()
            .map(|f| {
                let pseudo_unseen = intern(f.pseudo_unseen);
                Fold { pseudo_seen: intern(f.pseudo_seen), pseudo_unseen }
            })
            .collect();
        let n = folds.first().map_or(0, |f| f.pseudo_seen.len() + f.pseudo_unseen.len());
        let (l, r) = n.checked_div(w.k).zip(n.checked_rem(w.k)).unwrap_or((0, 0));
        FoldPlan { classes, folds, k: w.k, n, l, r }
    }
}

impl From<FoldPlan> for FoldPlanWire {
    fn from(p: FoldPlan) -> Self {
        let owned = |idx: &[usize]| idx.iter().map(|&i| p.class_name(i).to_string()).collect();
        let folds = p
            .folds
            .iter()
            .map(|f| FoldWire { pseudo_seen: owned(&f.pseudo_seen), pseudo_unseen: owned(&f.pseudo_unseen) })
            .collect();
        FoldPlanWire { k: p.k, folds }
    }
}

/// Contiguous pseudo-unseen blocks over the (optionally shuffled) class order:
/// the first `n % k` folds take `n / k + 1` classes, the rest `n / k`.
pub fn build_fold_plan<S: AsRef<str>>(
    seen_classes: &[S],
    k: usize,
    shuffle_seed: Option<u64>,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::DegenerateK(k));
    }
    let mut order: Vec<String> = seen_classes.iter().map(|s| s.as_ref().to_string()).collect();
    let mut uniq = std::collections::HashSet::new();
    for c in &order {
        if !uniq.insert(c.as_str()) {
            return Err(Error::DuplicateClassId(c.clone()));
        }
    }
    let n = order.len();
    if k > n {
        return Err(Error::TooFewClasses { n, k });
    }
    if let Some(s) = shuffle_seed {
        order.shuffle(&mut seed::rng_from(seed::derive_seed(s, &[seed::TAG_SHUFFLE])));
    }
    let (l, r) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let end = start + if fold < r { l + 1 } else { l };
        folds.push(Fold { pseudo_seen: (0..start).chain(end..n).collect(), pseudo_unseen: (start..end).collect() });
        start = end;
    }
    Ok(FoldPlan { classes: order, folds, k, n, l, r })
}

/// A broken plan property, with the fold and classes involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Pseudo-seen and pseudo-unseen must partition the seen classes.
    Partition { fold: usize, detail: String },
    Balance { fold: usize, expected: usize, actual: usize },
    Coverage { missing: Vec<String> },
    PairwiseDisjointness { class: String, folds: Vec<usize> },
    FoldCount { expected: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Partition { fold, detail } => write!(f, "partition violated in fold {fold}: {detail}"),
            Violation::Balance { fold, expected, actual } => write!(
                f,
                "balance violated in fold {fold}: {actual} pseudo-unseen classes, expected {expected}"
            ),
            Violation::Coverage { missing } => {
                write!(f, "coverage violated: never pseudo-unseen: {}", missing.join(", "))
            }
            Violation::PairwiseDisjointness { class, folds } => write!(
                f,
                "pairwise disjointness violated: {class} is pseudo-unseen in folds {folds:?}"
            ),
            Violation::FoldCount { expected, actual } => {
                write!(f, "plan declares k={expected} but holds {actual} folds")
            }
        }
    }
}

pub fn verify_fold_plan(plan: &FoldPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    if plan.folds.len() != plan.k {
        out.push(Violation::FoldCount { expected: plan.k, actual: plan.folds.len() });
    }
    let n = plan.classes.len();
    // Last fold in which each class took each role.
    let mut seen_in = vec![usize::MAX; n];
    let mut unseen_at = vec![usize::MAX; n];
    let mut unseen_in: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, f) in plan.folds.iter().enumerate() {
        let mut unknown = Vec::new();
        for &c in &f.pseudo_seen {
            match seen_in.get_mut(c) {
                Some(s) => *s = i,
                None => unknown.push(c),
            }
        }
        let mut overlap = Vec::new();
        for &c in &f.pseudo_unseen {
            if c >= n {
                unknown.push(c);
                continue;
            }
            if seen_in[c] == i {
                overlap.push(plan.class_name(c));
            }
            if unseen_at[c] != i {
                unseen_at[c] = i;
                unseen_in[c].push(i);
            }
        }
        if !unknown.is_empty() {
            out.push(Violation::Partition { fold: i, detail: format!("unknown class indices {unknown:?}") });
        }
        if !overlap.is_empty() {
            overlap.sort_unstable();
            out.push(Violation::Partition { fold: i, detail: format!("both roles: {}", overlap.join(", ")) });
        }
        let missing: Vec<&str> =
            (0..n).filter(|&c| seen_in[c] != i && unseen_at[c] != i).map(|c| plan.class_name(c)).collect();
        if !missing.is_empty() {
            out.push(Violation::Partition { fold: i, detail: format!("absent: {}", missing.join(", ")) });
        }
        if let (Some(l), Some(r)) = (n.checked_div(plan.k), n.checked_rem(plan.k)) {
            let expected = l + usize::from(i < r);
            let actual = f.pseudo_unseen.len();
            if actual != expected {
                out.push(Violation::Balance { fold: i, expected, actual });
            }
        }
    }
    let missing: Vec<String> = (0..n).filter(|&c| unseen_in[c].is_empty()).map(|c| plan.classes[c].clone()).collect();
    if !missing.is_empty() {
        out.push(Violation::Coverage { missing });
    }
    for (c, folds) in unseen_in.into_iter().enumerate() {
        if folds.len() > 1 {
            out.push(Violation::PairwiseDisjointness { class: plan.classes[c].clone(), folds });
        }
    }
    out
}

/// Training and validation data for one fold.
#[derive(Debug, Clone)]
pub struct FoldView {
    pub train: VisualSet,
    pub train_semantics: SemanticSpace,
    pub val: VisualSet,
    pub val_semantics: SemanticSpace,
}

pub fn fold_views(seen: &SeenData, plan: &FoldPlan, fold_index: usize) -> Result<FoldView> {
    if fold_index >= plan.folds.len() {
        return Err(Error::IndexOutOfRange { index: fold_index, len: plan.folds.len() });
    }
    let (ps, pu) = (plan.pseudo_seen(fold_index), plan.pseudo_unseen(fold_index));
    let present: std::collections::HashSet<&str> = seen.train.labels().iter().map(String::as_str).collect();
    if let Some(c) = ps.iter().chain(&pu).find(|c| !present.contains(*c)) {
        return Err(Error::EmptyClass(c.to_string()));
    }
    Ok(FoldView {
        train: seen.train.select_classes(&ps)?,
        train_semantics: seen.semantics.select_classes(&ps)?,
        val: seen.train.select_classes(&pu)?,
        val_semantics: seen.semantics.select_classes(&pu)?,
    })
}
