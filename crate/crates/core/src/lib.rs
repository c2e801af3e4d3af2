//! Semantic attribute selection for inductive zero-shot learning.
//!
//! Seen classes are split into pseudo-seen / pseudo-unseen folds
//! ([`partition`]), a linear semantic autoencoder ([`sae`]) is the base model,
//! and attribute subsets are chosen either by per-fold ranking, a wrapper walk
//! and fold consensus ([`rfs`]) or by a genetic search over binary masks
//! ([`ga`]). [`synthgen`] builds planted-relevance bundles with an exhaustive
//! oracle, and [`experiment`] wires everything into reproducible runs.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ga;
pub mod io;
pub mod partition;
pub mod rankers;
pub mod rfs;
pub mod sae;
pub mod seed;
pub mod sylvester;
pub mod synthgen;

mod par;

pub use data::{normalize_rows, AttributeMask, ClassSplit, SeenData, SemanticSpace, VisualSet, ZslBundle};
pub use error::{Error, ErrorClass, Result};
pub use eval::{SaeSettings, SplitProblem, TrainingCounter};
pub use partition::{build_fold_plan, fold_views, verify_fold_plan, FoldPlan, FoldView};
pub use sae::{train_sae, AccuracyMode, SaeModel, SaePredictor};
pub use sylvester::solve_sylvester;
