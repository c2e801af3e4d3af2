use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn semsel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semsel"))
        .args(args)
        .current_dir(dir)
        .env("SEMSEL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = semsel(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn small_bundle(dir: &Path) {
    fs::write(dir.join("spec.json"), r#"{"n_noise": 4, "instances_per_class": 10}"#).unwrap();
    ok(&["synth", "--spec", "spec.json", "--out", "bundle", "--seed", "3"], dir);
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

const GA_ARGS: &[&str] = &["--runs", "2", "--generations", "8", "--pop-size", "12"];

fn run_all(dir: &Path, out: &str) {
    let o = |m: &str| format!("{out}/{m}");
    ok(&["partition", "--bundle", "bundle", "--out", &o("partition"), "--shuffle-classes", "5"], dir);
    ok(&["baseline", "--bundle", "bundle", "--out", &o("baseline")], dir);
    ok(&["rfs", "--bundle", "bundle", "--out", &o("rfs"), "--ranker", "forest", "--threshold", "2"], dir);
    let mut ga = vec!["ga", "--bundle", "bundle", "--out"];
    let ga_out = o("ga");
    ga.push(&ga_out);
    ga.extend(GA_ARGS);
    ok(&ga, dir);
    ok(&["oracle", "--bundle", "bundle", "--out", &o("oracle")], dir);
}

#[test]
fn synth_writes_bundle_and_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&["synth", "--out", "b"], tmp.path());
    assert!(stdout.contains("4 of 16 attributes relevant"));
    for f in ["semantics.csv", "train.bin", "test.bin", "split.json", "ground_truth.csv", "synth_spec.json"] {
        assert!(tmp.path().join("b").join(f).exists(), "{f}");
    }
    let truth = fs::read_to_string(tmp.path().join("b/ground_truth.csv")).unwrap();
    assert_eq!(truth.lines().next(), Some("attribute_index,attribute_name,relevant"));
    assert_eq!(truth.lines().filter(|l| l.ends_with(",1")).count(), 4);
}

#[test]
fn every_subcommand_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_bundle(dir);
    run_all(dir, "a");
    run_all(dir, "a2");
    let a = snapshot(&dir.join("a"));
    let b = snapshot(&dir.join("a2"));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        // Manifests record their own output directory.
        if !k.ends_with("manifest.json") {
            assert!(b[k] == *v, "{k} differs");
        }
    }
    assert!(a.contains_key("ga/runs/run01/ga_trace.csv"));
    assert!(a.contains_key("rfs/rfs_masks_T5.csv"));
    assert!(a.contains_key("oracle/oracle_mask.csv"));
    assert!(a.contains_key("partition/fold_plan.json"));
}

#[test]
fn rerun_from_manifest_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_bundle(dir);
    let mut args = vec!["ga", "--bundle", "bundle", "--out", "g", "--seed", "7", "--no-cv"];
    args.extend(GA_ARGS);
    ok(&args, dir);
    let first = snapshot(&dir.join("g"));
    fs::copy(dir.join("g/manifest.json"), dir.join("m.json")).unwrap();
    fs::remove_dir_all(dir.join("g")).unwrap();
    ok(&["ga", "--config", "m.json"], dir);
    assert_eq!(first, snapshot(&dir.join("g")));
    let manifest = String::from_utf8(first["manifest.json"].clone()).unwrap();
    assert!(manifest.contains("\"method\": \"ga_nocv\""));
}

#[test]
fn compare_merges_and_rejects_mixed_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_bundle(dir);
    ok(&["baseline", "--bundle", "bundle", "--out", "base"], dir);
    ok(&["rfs", "--bundle", "bundle", "--out", "rfs"], dir);
    let csv = ok(&["compare", "base/report.json", "rfs/report.json", "--out", "cmp.csv"], dir);
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "method,variant,attribute_count,unseen_accuracy,accuracy_ci95,sae_training_count,best");
    assert_eq!(csv.lines().filter(|l| l.ends_with(",1")).count(), 1);
    assert_eq!(fs::read_to_string(dir.join("cmp.csv")).unwrap(), csv);

    ok(&["synth", "--out", "other", "--seed", "99"], dir);
    ok(&["baseline", "--bundle", "other", "--out", "base2"], dir);
    let out = semsel(&["compare", "base/report.json", "base2/report.json", "--out", "x.csv"], dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bundle"));
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(semsel(&["baseline", "--bundle", "missing", "--out", "o"], dir).status.code(), Some(3));
    small_bundle(dir);
    assert_eq!(semsel(&["baseline", "--bundle", "bundle", "--out", "o", "--k", "1"], dir).status.code(), Some(2));
    assert_eq!(semsel(&["baseline", "--bundle", "bundle", "--out", "o", "--lambda", "-1"], dir).status.code(), Some(2));
    assert_eq!(semsel(&["rfs", "--bundle", "bundle", "--out", "o", "--threshold", "9"], dir).status.code(), Some(2));
    assert_eq!(semsel(&["frobnicate"], dir).status.code(), Some(2));
    fs::write(dir.join("bad.json"), r#"{"mystery": 1}"#).unwrap();
    assert_eq!(semsel(&["baseline", "--config", "bad.json"], dir).status.code(), Some(2));
}

#[test]
fn oracle_refuses_wide_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("spec.json"), r#"{"n_noise": 13, "instances_per_class": 4}"#).unwrap();
    ok(&["synth", "--spec", "spec.json", "--out", "wide"], dir);
    let out = semsel(&["oracle", "--bundle", "wide", "--out", "o"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("17"));
}

#[test]
fn unknown_spec_field_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.json"), r#"{"n_instances": 4}"#).unwrap();
    let out = semsel(&["synth", "--spec", "s.json", "--out", "b"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
