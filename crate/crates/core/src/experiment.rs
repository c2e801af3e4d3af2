//! End-to-end runs: load a bundle, select attributes with one method, retrain
//! on all seen classes, score the unseen test set, and write reports.
//!
//! Every output file except the optional `timing.json` is a pure function of
//! the resolved config and the bundle contents.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeMask, ZslBundle};
use crate::error::{Error, Result};
use crate::eval::{unseen_accuracy, SaeSettings, TrainingCounter};
use crate::ga::{multi_run, FitnessContext, GaConfig, MultiRunResult};
use crate::io::{bundle_hash, load_bundle, read_json, write_atomic, write_json};
use crate::partition::{build_fold_plan, FoldPlan, DEFAULT_K};
use crate::rankers::RankerSpec;
use crate::rfs::{evaluate_thresholds, run_rfs, WalkOptions, DEFAULT_THRESHOLD};
use crate::sae::AccuracyMode;
use crate::seed;
use crate::synthgen::{exhaustive_best_mask_with, ORACLE_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Baseline,
    Rfs,
    Ga,
    GaNocv,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Rfs => "rfs",
            Method::Ga => "ga",
            Method::GaNocv => "ga_nocv",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bundle_path: PathBuf,
    pub output_dir: PathBuf,
    pub method: Method,
    pub k_folds: usize,
    pub lambda: f64,
    pub accuracy_mode: AccuracyMode,
    pub master_seed: u64,
    /// Shuffle seen classes with this seed before cutting folds; file order when unset.
    pub shuffle_seed: Option<u64>,
    pub ranker: RankerSpec,
    pub stride: Option<usize>,
    pub headline_threshold: usize,
    pub ga: GaConfig,
    pub runs: usize,
    pub normalize_prototypes: bool,
    pub normalize_features: bool,
    /// Write `timing.json` with the wall-clock time of the run.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            bundle_path: PathBuf::new(),
            output_dir: PathBuf::new(),
            method: Method::Baseline,
            k_folds: DEFAULT_K,
            lambda: crate::sae::DEFAULT_LAMBDA,
            accuracy_mode: AccuracyMode::PerInstance,
            master_seed: 0,
            shuffle_seed: None,
            ranker: RankerSpec::default(),
            stride: None,
            headline_threshold: DEFAULT_THRESHOLD,
            ga: GaConfig::default(),
            runs: 20,
            normalize_prototypes: false,
            normalize_features: false,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn settings(&self) -> SaeSettings {
        SaeSettings { lambda: self.lambda, accuracy: self.accuracy_mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::InvalidConfig("output_dir is required".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.k_folds < 2 {
            return Err(Error::DegenerateK(self.k_folds));
        }
        if self.headline_threshold == 0 || self.headline_threshold > self.k_folds {
            return Err(Error::InvalidConfig(format!(
                "headline_threshold must lie in 1..={}, got {}",
                self.k_folds, self.headline_threshold
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        self.ga.validate()
    }

    /// Seeds are derived from `master_seed`; any seeds in the nested sections are replaced.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.ranker.seed = seed::derive_seed(self.master_seed, &[seed::TAG_RANKER]);
        out.ga.seed = seed::derive_seed(self.master_seed, &[seed::TAG_GA]);
        out.ga.use_cv = self.method != Method::GaNocv;
        out
    }

    fn plan_seed(&self) -> Option<u64> {
        self.shuffle_seed
    }
}

/// Either a bare config or a manifest written by a previous run.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let value: serde_json::Value = read_json(path)?;
    let inner = match value.get("config") {
        Some(c) if value.get("bundle_hash").is_some() => c.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub variant: String,
    pub attribute_count: f64,
    pub unseen_accuracy: Option<f64>,
    pub accuracy_ci95: Option<f64>,
    pub sae_training_count: u64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub bundle_hash: String,
    pub n_attributes: usize,
    pub rows: Vec<ReportRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,variant,attribute_count,unseen_accuracy,accuracy_ci95,sae_training_count\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&r.method),
                csv_field(&r.variant),
                r.attribute_count,
                opt(r.unseen_accuracy),
                opt(r.accuracy_ci95),
                r.sae_training_count
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub bundle_hash: String,
    pub config: ExperimentConfig,
    pub fold_plan_seed: Option<u64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Timing {
    wall_time_seconds: f64,
}

pub fn mask_csv(mask: &AttributeMask, names: &[String]) -> String {
    let mut out = String::from("attribute_index,attribute_name,selected\n");
    for (j, name) in names.iter().enumerate() {
        out.push_str(&format!("{j},{},{}\n", csv_field(name), u8::from(mask.get(j))));
    }
    out
}

fn frequency_csv(freq: &[usize], names: &[String]) -> String {
    let mut out = String::from("attribute_index,attribute_name,frequency\n");
    for (j, (f, name)) in freq.iter().zip(names).enumerate() {
        out.push_str(&format!("{j},{},{f}\n", csv_field(name)));
    }
    out
}

fn load_prepared(config: &ExperimentConfig) -> Result<ZslBundle> {
    if config.bundle_path.as_os_str().is_empty() {
        return Err(Error::InvalidConfig("bundle_path is required".into()));
    }
    let bundle = load_bundle(&config.bundle_path)?;
    Ok(bundle.normalized(config.normalize_prototypes, config.normalize_features))
}

fn manifest(config: &ExperimentConfig, bundle: &ZslBundle) -> Manifest {
    let mut notes = Vec::new();
    if matches!(config.method, Method::Ga | Method::GaNocv) && config.ga.per_gene_mutation_rate.is_none() {
        notes.push(format!("per-gene mutation rate defaulted to 1/N = 1/{}", bundle.n_attributes()));
    }
    if config.method == Method::Rfs && matches!(config.ranker.kind, crate::rankers::RankerKind::LinearCoef { .. }) {
        notes.push("linear ranking scores are sums of absolute one-vs-rest coefficients on standardised prototypes".into());
    }
    Manifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        bundle_hash: bundle_hash(bundle),
        config: config.clone(),
        fold_plan_seed: config.plan_seed(),
        notes,
    }
}

fn seen_plan(config: &ExperimentConfig, bundle: &ZslBundle) -> Result<FoldPlan> {
    build_fold_plan(&bundle.seen_classes(), config.k_folds, config.plan_seed())
}

/// Loads the bundle named in `config` and runs it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let bundle = load_prepared(config)?;
    run_on_bundle(config, &bundle)
}

/// Runs `config.method` on an already loaded bundle and writes all outputs.
pub fn run_on_bundle(config: &ExperimentConfig, bundle: &ZslBundle) -> Result<ComparisonReport> {
    config.validate()?;
    let start = Instant::now();
    let config = config.resolved();
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let settings = config.settings();
    let names = bundle.semantics.attribute_names().to_vec();
    let n = bundle.n_attributes();

    let rows = match config.method {
        Method::Baseline => {
            let counter = TrainingCounter::new();
            let (acc, model) = unseen_accuracy(bundle, &AttributeMask::ones(n), settings, &counter)?;
            model.save(&out.join("model_baseline.bin"), &names)?;
            vec![ReportRow {
                method: "baseline".into(),
                variant: "all".into(),
                attribute_count: n as f64,
                unseen_accuracy: Some(acc),
                accuracy_ci95: None,
                sae_training_count: counter.get(),
                note: None,
            }]
        }
        Method::Rfs => rfs_rows(&config, bundle, out)?,
        Method::Ga | Method::GaNocv => ga_rows(&config, bundle, out)?,
        Method::Oracle => oracle_rows(&config, bundle, out)?,
    };

    let report = ComparisonReport { bundle_hash: bundle_hash(bundle), n_attributes: n, rows };
    write_json(&out.join("report.json"), &report)?;
    write_atomic(&out.join("report.csv"), report.to_csv().as_bytes())?;
    write_json(&out.join("manifest.json"), &manifest(&config, bundle))?;
    let elapsed = start.elapsed().as_secs_f64();
    log::info!("{} finished in {elapsed:.2}s", config.method.name());
    if config.record_timing {
        write_json(&out.join("timing.json"), &Timing { wall_time_seconds: elapsed })?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
struct RfsThresholdEntry {
    threshold: usize,
    mask: AttributeMask,
    attribute_count: usize,
    unseen_accuracy: Option<f64>,
    note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct RfsReport<'a> {
    ranker: &'a RankerSpec,
    headline_threshold: usize,
    selection_sae_trainings: u64,
    folds: &'a [crate::rfs::FoldSelection],
    frequency: &'a [usize],
    thresholds: Vec<RfsThresholdEntry>,
}

fn rfs_rows(config: &ExperimentConfig, bundle: &ZslBundle, out: &Path) -> Result<Vec<ReportRow>> {
    let settings = config.settings();
    let plan = seen_plan(config, bundle)?;
    write_json(&out.join("fold_plan.json"), &plan)?;
    let selection = TrainingCounter::new();
    let result = run_rfs(
        &bundle.seen_data(),
        &plan,
        &config.ranker,
        settings,
        WalkOptions { stride: config.stride },
        &selection,
    )?;
    let final_counter = TrainingCounter::new();
    let rows = evaluate_thresholds(bundle, &result.consensus, settings, &final_counter)?;
    let names = bundle.semantics.attribute_names();
    for (i, mask) in result.consensus.masks_by_threshold.iter().enumerate() {
        write_atomic(&out.join(format!("rfs_masks_T{}.csv", i + 1)), mask_csv(mask, names).as_bytes())?;
    }
    let entries: Vec<RfsThresholdEntry> = rows
        .iter()
        .zip(&result.consensus.masks_by_threshold)
        .map(|(r, m)| RfsThresholdEntry {
            threshold: r.threshold,
            mask: m.clone(),
            attribute_count: r.attribute_count,
            unseen_accuracy: r.unseen_accuracy,
            note: r.note.clone(),
        })
        .collect();
    write_json(
        &out.join("rfs_report.json"),
        &RfsReport {
            ranker: &config.ranker,
            headline_threshold: config.headline_threshold,
            selection_sae_trainings: selection.get(),
            folds: &result.folds,
            frequency: &result.consensus.frequency,
            thresholds: entries,
        },
    )?;

    let headline_mask = &result.consensus.masks_by_threshold[config.headline_threshold - 1];
    if headline_mask.count() > 0 {
        let (_, model) = unseen_accuracy(bundle, headline_mask, settings, &TrainingCounter::new())?;
        let restricted: Vec<String> = headline_mask.indices().into_iter().map(|j| names[j].clone()).collect();
        model.save(&out.join(format!("model_rfs_T{}.bin", config.headline_threshold)), &restricted)?;
    }

    let to_row = |r: &crate::rfs::ThresholdRow, variant: String| ReportRow {
        method: "rfs".into(),
        variant,
        attribute_count: r.attribute_count as f64,
        unseen_accuracy: r.unseen_accuracy,
        accuracy_ci95: None,
        sae_training_count: selection.get() + u64::from(r.unseen_accuracy.is_some()),
        note: r.note.clone(),
    };
    let mut out_rows: Vec<ReportRow> = rows.iter().map(|r| to_row(r, format!("T{}", r.threshold))).collect();
    let headline = &rows[config.headline_threshold - 1];
    out_rows.push(to_row(headline, format!("headline_T{}", headline.threshold)));
    Ok(out_rows)
}

#[derive(Debug, Clone, Serialize)]
struct GaRunSummary {
    run: usize,
    seed: u64,
    best_fitness: Option<f64>,
    best_mask: Option<AttributeMask>,
    unseen_accuracy: Option<f64>,
    cache_misses: Option<u64>,
    sae_trainings: Option<u64>,
    error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct GaReport<'a> {
    config: &'a GaConfig,
    runs: Vec<GaRunSummary>,
    best_run: usize,
    frequency: &'a [usize],
    mean_accuracy: f64,
    ci95: f64,
    sae_trainings: u64,
}

/// Index of the run with the highest best fitness; ties go to fewer attributes, then the lower run.
fn best_run(result: &MultiRunResult) -> Option<usize> {
    let mut best: Option<(usize, f64, usize)> = None;
    for (r, o) in result.successful() {
        let cand = (r.run, o.trace.best_fitness, o.trace.best_mask.count());
        if best.is_none_or(|b| cand.1 > b.1 || (cand.1 == b.1 && cand.2 < b.2)) {
            best = Some(cand);
        }
    }
    best.map(|b| b.0)
}

fn ga_rows(config: &ExperimentConfig, bundle: &ZslBundle, out: &Path) -> Result<Vec<ReportRow>> {
    let settings = config.settings();
    let plan = seen_plan(config, bundle)?;
    write_json(&out.join("fold_plan.json"), &plan)?;
    let result = multi_run(bundle, &plan, &config.ga, settings, config.runs)?;
    let names = bundle.semantics.attribute_names();
    let method = config.method.name();

    let mut runs_csv = String::from("run,seed,best_fitness,attribute_count,unseen_accuracy,cache_misses,sae_trainings,error\n");
    let mut summaries = Vec::new();
    for r in &result.runs {
        match &r.outcome {
            Ok(o) => {
                runs_csv.push_str(&format!(
                    "{},{},{},{},{},{},{},\n",
                    r.run,
                    r.seed,
                    o.trace.best_fitness,
                    o.trace.best_mask.count(),
                    o.unseen_accuracy,
                    o.trace.cache_misses,
                    o.trace.sae_trainings
                ));
                let dir = out.join("runs").join(format!("run{:02}", r.run));
                write_atomic(&dir.join("ga_trace.csv"), o.trace.to_csv().as_bytes())?;
                write_atomic(&dir.join("ga_best_mask.csv"), mask_csv(&o.trace.best_mask, names).as_bytes())?;
                summaries.push(GaRunSummary {
                    run: r.run,
                    seed: r.seed,
                    best_fitness: Some(o.trace.best_fitness),
                    best_mask: Some(o.trace.best_mask.clone()),
                    unseen_accuracy: Some(o.unseen_accuracy),
                    cache_misses: Some(o.trace.cache_misses),
                    sae_trainings: Some(o.trace.sae_trainings),
                    error: None,
                });
            }
            Err(e) => {
                runs_csv.push_str(&format!("{},{},,,,,,{}\n", r.run, r.seed, csv_field(e)));
                summaries.push(GaRunSummary {
                    run: r.run,
                    seed: r.seed,
                    best_fitness: None,
                    best_mask: None,
                    unseen_accuracy: None,
                    cache_misses: None,
                    sae_trainings: None,
                    error: Some(e.clone()),
                });
            }
        }
    }
    write_atomic(&out.join("ga_runs.csv"), runs_csv.as_bytes())?;
    write_atomic(&out.join("ga_frequency.csv"), frequency_csv(&result.frequency, names).as_bytes())?;

    let best = best_run(&result).ok_or_else(|| Error::InvalidConfig("every GA run failed".into()))?;
    let best_outcome = result.runs[best].outcome.as_ref().expect("successful run");
    write_atomic(&out.join("ga_trace.csv"), best_outcome.trace.to_csv().as_bytes())?;
    write_atomic(&out.join("ga_best_mask.csv"), mask_csv(&best_outcome.trace.best_mask, names).as_bytes())?;
    let (_, model) = unseen_accuracy(bundle, &best_outcome.trace.best_mask, settings, &TrainingCounter::new())?;
    let restricted: Vec<String> =
        best_outcome.trace.best_mask.indices().into_iter().map(|j| names[j].clone()).collect();
    model.save(&out.join(format!("model_{method}_best.bin")), &restricted)?;
    write_json(
        &out.join("ga_report.json"),
        &GaReport {
            config: &config.ga,
            runs: summaries,
            best_run: best,
            frequency: &result.frequency,
            mean_accuracy: result.mean_accuracy,
            ci95: result.ci95,
            sae_trainings: result.sae_trainings,
        },
    )?;

    let ok: Vec<_> = result.successful().collect();
    let failed = result.runs.len() - ok.len();
    let mean_count = ok.iter().map(|(_, o)| o.trace.best_mask.count() as f64).sum::<f64>() / ok.len() as f64;
    Ok(vec![
        ReportRow {
            method: method.into(),
            variant: format!("mean_of_{}", ok.len()),
            attribute_count: mean_count,
            unseen_accuracy: Some(result.mean_accuracy),
            accuracy_ci95: Some(result.ci95),
            sae_training_count: result.sae_trainings,
            note: (failed > 0).then(|| format!("{failed} runs failed")),
        },
        ReportRow {
            method: method.into(),
            variant: format!("best_run_{best:02}"),
            attribute_count: best_outcome.trace.best_mask.count() as f64,
            unseen_accuracy: Some(best_outcome.unseen_accuracy),
            accuracy_ci95: None,
            sae_training_count: best_outcome.trace.sae_trainings + 1,
            note: None,
        },
    ])
}

fn oracle_rows(config: &ExperimentConfig, bundle: &ZslBundle, out: &Path) -> Result<Vec<ReportRow>> {
    let n = bundle.n_attributes();
    if n > ORACLE_LIMIT {
        return Err(Error::TooManyAttributes { n, max: ORACLE_LIMIT });
    }
    let settings = config.settings();
    let plan = seen_plan(config, bundle)?;
    write_json(&out.join("fold_plan.json"), &plan)?;
    let ctx = FitnessContext::new(&bundle.seen_data(), &plan, settings, true)?;
    let counter = TrainingCounter::new();
    let (mask, fitness) = exhaustive_best_mask_with(&ctx, ORACLE_LIMIT, &counter)?;
    let (acc, _) = unseen_accuracy(bundle, &mask, settings, &counter)?;
    write_atomic(&out.join("oracle_mask.csv"), mask_csv(&mask, bundle.semantics.attribute_names()).as_bytes())?;
    Ok(vec![ReportRow {
        method: "oracle".into(),
        variant: "exhaustive".into(),
        attribute_count: mask.count() as f64,
        unseen_accuracy: Some(acc),
        accuracy_ci95: None,
        sae_training_count: counter.get(),
        note: Some(format!("cross-validated fitness {fitness}")),
    }])
}

/// Builds the fold plan for the bundle's seen classes and writes `fold_plan.json`.
pub fn run_partition(config: &ExperimentConfig) -> Result<FoldPlan> {
    config.validate()?;
    let bundle = load_prepared(config)?;
    let plan = seen_plan(config, &bundle)?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join("fold_plan.json"), &plan)?;
    write_json(&out.join("manifest.json"), &manifest(&config.resolved(), &bundle))?;
    Ok(plan)
}

/// Merges reports from one bundle into a CSV with the best accuracy flagged.
/// Duplicate (method, variant) pairs keep their first occurrence.
pub fn compare(reports: &[PathBuf]) -> Result<String> {
    let first = reports.first().ok_or_else(|| Error::InvalidConfig("no reports to compare".into()))?;
    let base: ComparisonReport = read_json(first)?;
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for path in reports {
        let report: ComparisonReport = read_json(path)?;
        if report.bundle_hash != base.bundle_hash {
            return Err(Error::BundleMismatch(base.bundle_hash.clone(), report.bundle_hash));
        }
        for r in report.rows {
            if seen.insert((r.method.clone(), r.variant.clone())) {
                rows.push(r);
            }
        }
    }
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.unseen_accuracy.map(|a| (i, a, r.attribute_count)))
        .reduce(|b, c| if c.1 > b.1 || (c.1 == b.1 && c.2 < b.2) { c } else { b })
        .map(|b| b.0);
    let mut out =
        String::from("method,variant,attribute_count,unseen_accuracy,accuracy_ci95,sae_training_count,best\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&r.method),
            csv_field(&r.variant),
            r.attribute_count,
            opt(r.unseen_accuracy),
            opt(r.accuracy_ci95),
            r.sae_training_count,
            u8::from(best == Some(i))
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_from_empty_json() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.k_folds, 5);
        assert_eq!(c.runs, 20);
        assert_eq!(c.headline_threshold, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"lamda": 3}"#).is_err());
    }

    #[test]
    fn resolution_derives_seeds_from_master() {
        let c = ExperimentConfig { master_seed: 9, method: Method::GaNocv, ..Default::default() };
        let r = c.resolved();
        assert_eq!(r.ranker.seed, seed::derive_seed(9, &[seed::TAG_RANKER]));
        assert!(!r.ga.use_cv);
        assert_eq!(r.resolved(), r);
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig { output_dir: "out".into(), ..Default::default() };
        assert!(ok.validate().is_ok());
        assert!(matches!(ExperimentConfig::default().validate(), Err(Error::InvalidConfig(_))));
        let bad = ExperimentConfig { headline_threshold: 6, ..ok.clone() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        let bad = ExperimentConfig { k_folds: 1, ..ok };
        assert!(matches!(bad.validate(), Err(Error::DegenerateK(1))));
    }

    #[test]
    fn mask_csv_layout() {
        let names = vec!["a".to_string(), "b,c".to_string()];
        let csv = mask_csv(&AttributeMask::from_bits(vec![false, true]), &names);
        assert_eq!(csv, "attribute_index,attribute_name,selected\n0,a,0\n1,\"b,c\",1\n");
    }

    #[test]
    fn compare_rejects_empty_input() {
        assert!(matches!(compare(&[]), Err(Error::InvalidConfig(_))));
    }
}
