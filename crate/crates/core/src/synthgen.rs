//! Synthetic bundles with planted attribute relevance, plus an exhaustive
//! mask oracle for small attribute counts.
//!
//! Relevant attributes are continuous Gaussian per class; noise attributes are
//! independent ±1 coin flips per class. Visual features are a fixed random
//! linear map of the relevant attributes only, scaled to unit power per
//! dimension, plus isotropic Gaussian noise of standard deviation
//! `noise_scale`. Noise attributes carry no visual signal. Column positions
//! are shuffled.

use std::cmp::Ordering;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeMask, ClassSplit, SeenData, SemanticSpace, VisualSet, ZslBundle};
use crate::error::{Error, Result};
use crate::eval::{SaeSettings, TrainingCounter};
use crate::ga::FitnessContext;
use crate::io::{read_json, save_bundle, write_atomic, write_json};
use crate::par;
use crate::partition::FoldPlan;
use crate::seed;

pub const ORACLE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_seen: usize,
    pub n_unseen: usize,
    pub n_relevant: usize,
    pub n_noise: usize,
    pub visual_dim: usize,
    pub instances_per_class: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_seen: 8,
            n_unseen: 4,
            n_relevant: 4,
            n_noise: 12,
            visual_dim: 32,
            instances_per_class: 20,
            noise_scale: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_seen", self.n_seen),
            ("n_unseen", self.n_unseen),
            ("n_relevant", self.n_relevant),
            ("visual_dim", self.visual_dim),
            ("instances_per_class", self.instances_per_class),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidSpec(format!("{name} must be at least 1")));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidSpec(format!("noise_scale must be finite and non-negative, got {}", self.noise_scale)));
        }
        Ok(())
    }

    pub fn n_attributes(&self) -> usize {
        self.n_relevant + self.n_noise
    }
}

/// Returns the bundle and the mask of relevant attributes.
pub fn generate(spec: &SynthSpec) -> Result<(ZslBundle, AttributeMask)> {
    spec.validate()?;
    let mut rng = seed::rng_from(seed::derive_seed(spec.seed, &[seed::TAG_SYNTH]));
    let n_classes = spec.n_seen + spec.n_unseen;
    let n_attr = spec.n_attributes();

    let mut columns: Vec<usize> = (0..n_attr).collect();
    columns.shuffle(&mut rng);
    let relevant_cols = &columns[..spec.n_relevant];

    let relevant = DMatrix::from_fn(n_classes, spec.n_relevant, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = DMatrix::from_fn(n_classes, spec.n_noise, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    let mut protos = DMatrix::zeros(n_classes, n_attr);
    for (k, &col) in columns.iter().enumerate() {
        let src = if k < spec.n_relevant { relevant.column(k) } else { noise.column(k - spec.n_relevant) };
        protos.set_column(col, &src);
    }

    // Unit signal power per visual dimension, so `noise_scale` is a noise-to-signal ratio.
    let gain = (spec.n_relevant as f64).sqrt().recip();
    let map = DMatrix::from_fn(spec.visual_dim, spec.n_relevant, |_, _| gain * rng.sample::<f64, _>(StandardNormal));
    let class_ids: Vec<String> = (0..n_classes).map(|c| format!("class{c:03}")).collect();
    let draw = |classes: std::ops::Range<usize>, rng: &mut seed::Rng| -> Result<VisualSet> {
        let rows = classes.len() * spec.instances_per_class;
        let mut feats = DMatrix::zeros(rows, spec.visual_dim);
        let mut labels = Vec::with_capacity(rows);
        for (ci, c) in classes.enumerate() {
            let clean = &map * relevant.row(c).transpose();
            for i in 0..spec.instances_per_class {
                let r = ci * spec.instances_per_class + i;
                for d in 0..spec.visual_dim {
                    feats[(r, d)] = clean[d] + spec.noise_scale * rng.sample::<f64, _>(StandardNormal);
                }
                labels.push(class_ids[c].clone());
            }
        }
        VisualSet::new(feats, labels)
    };
    let train = draw(0..spec.n_seen, &mut rng)?;
    let test = draw(spec.n_seen..n_classes, &mut rng)?;

    let semantics = SemanticSpace::new(
        class_ids.clone(),
        (0..n_attr).map(|j| format!("attr{j:02}")).collect(),
        protos,
    )?;
    let split = ClassSplit {
        seen: class_ids[..spec.n_seen].to_vec(),
        unseen: class_ids[spec.n_seen..].to_vec(),
    };
    let truth = AttributeMask::from_indices(n_attr, relevant_cols.iter().copied());
    Ok((ZslBundle::new(semantics, train, test, split)?, truth))
}

/// Writes a bundle directory plus `ground_truth.csv` and `synth_spec.json`.
/// Reads a JSON spec; missing fields take defaults.
pub fn load_spec(path: &Path) -> Result<SynthSpec> {
    let value: serde_json::Value = read_json(path)?;
    serde_json::from_value(value).map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
}

pub fn write_synthetic(spec: &SynthSpec, dir: &Path) -> Result<(ZslBundle, AttributeMask)> {
    let (bundle, truth) = generate(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_bundle(&bundle, dir)?;
    let mut csv = String::from("attribute_index,attribute_name,relevant\n");
    for (j, name) in bundle.semantics.attribute_names().iter().enumerate() {
        csv.push_str(&format!("{j},{name},{}\n", u8::from(truth.get(j))));
    }
    write_atomic(&dir.join("ground_truth.csv"), csv.as_bytes())?;
    write_json(&dir.join("synth_spec.json"), spec)?;
    Ok((bundle, truth))
}

/// Total order used by the oracle: higher fitness, then fewer attributes,
/// then lexicographically smaller bits.
fn oracle_cmp(a: &(AttributeMask, f64), b: &(AttributeMask, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.count().cmp(&b.0.count())).then(a.0.cmp(&b.0))
}

pub fn exhaustive_best_mask_with(
    ctx: &FitnessContext,
    max_n: usize,
    counter: &TrainingCounter,
) -> Result<(AttributeMask, f64)> {
    let n = ctx.n_attributes();
    let limit = max_n.min(ORACLE_LIMIT);
    if n > limit {
        return Err(Error::TooManyAttributes { n, max: limit });
    }
    let total: u64 = (1u64 << n) - 1;
    let chunks = (total as usize).clamp(1, 256);
    let per_chunk = total.div_ceil(chunks as u64);
    let bests = par::map_range(chunks, |c| {
        let lo = 1 + c as u64 * per_chunk;
        let hi = (lo + per_chunk).min(total + 1);
        let mut best: Option<(AttributeMask, f64)> = None;
        for code in lo..hi {
            let mask = AttributeMask::from_bits((0..n).map(|j| code >> j & 1 == 1).collect());
            let f = ctx.evaluate(&mask, counter);
            let cand = (mask, f);
            if best.as_ref().is_none_or(|b| oracle_cmp(&cand, b) == Ordering::Less) {
                best = Some(cand);
            }
        }
        best
    });
    bests
        .into_iter()
        .flatten()
        .min_by(oracle_cmp)
        .ok_or(Error::EmptyMask)
}

pub fn exhaustive_best_mask(
    seen: &SeenData,
    plan: &FoldPlan,
    settings: SaeSettings,
    max_n: usize,
) -> Result<(AttributeMask, f64)> {
    let n = seen.semantics.n_attributes();
    if n > max_n.min(ORACLE_LIMIT) {
        return Err(Error::TooManyAttributes { n, max: max_n.min(ORACLE_LIMIT) });
    }
    let ctx = FitnessContext::new(seen, plan, settings, true)?;
    exhaustive_best_mask_with(&ctx, max_n, &TrainingCounter::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::bundle_hash;

    #[test]
    fn no_noise_means_full_truth() {
        let spec = SynthSpec { n_noise: 0, ..Default::default() };
        let (_, truth) = generate(&spec).unwrap();
        assert_eq!(truth, AttributeMask::ones(4));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec { seed: 42, ..Default::default() };
        let (a, ta) = generate(&spec).unwrap();
        let (b, tb) = generate(&spec).unwrap();
        assert_eq!(bundle_hash(&a), bundle_hash(&b));
        assert_eq!(ta, tb);
        let (c, _) = generate(&SynthSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(bundle_hash(&a), bundle_hash(&c));
    }

    #[test]
    fn shapes_follow_spec() {
        let spec = SynthSpec::default();
        let (b, truth) = generate(&spec).unwrap();
        assert_eq!(b.n_attributes(), 16);
        assert_eq!(truth.count(), 4);
        assert_eq!(b.train.len(), 8 * 20);
        assert_eq!(b.test.len(), 4 * 20);
        assert_eq!(b.train.dim(), 32);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(generate(&SynthSpec { n_seen: 0, ..Default::default() }), Err(Error::InvalidSpec(_))));
        assert!(matches!(generate(&SynthSpec { noise_scale: -1.0, ..Default::default() }), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn oracle_tie_order() {
        let m = |b: &[bool]| AttributeMask::from_bits(b.to_vec());
        let mut cands = [
            (m(&[true, true]), 0.5),
            (m(&[false, true]), 0.5),
            (m(&[true, false]), 0.5),
            (m(&[true, true]), 0.4),
        ];
        cands.sort_by(oracle_cmp);
        assert_eq!(cands[0].0, m(&[false, true]));
        assert_eq!(cands[1].0, m(&[true, false]));
    }
}
