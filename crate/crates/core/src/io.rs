//! Bundle directory I/O.
//!
//! Layout:
//! - `semantics.csv`: `class_id,<attr1>,...,<attrN>` header, one row per class.
//! - `train.bin` / `test.bin`: magic `SEMSEL01`, `u32` rows, `u32` cols (little endian),
//!   row-major `f32` values, then `\n#LABELS\n` and one label per line.
//! - `split.json`: `{"seen": [...], "unseen": [...]}`.
//!
//! `train.csv` / `test.csv` (`label,f1,...,fD`) are read when the binaries are absent.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::data::{ClassSplit, SemanticSpace, VisualSet, ZslBundle};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SEMSEL01";
const LABEL_SENTINEL: &[u8] = b"\n#LABELS\n";

/// Row-major f32 matrix with optional row labels, as stored in `.bin` files.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<String>,
}

pub fn encode_matrix(matrix: &DMatrix<f64>, labels: &[String]) -> Vec<u8> {
    let (rows, cols) = matrix.shape();
    let mut out = Vec::with_capacity(16 + rows * cols * 4 + LABEL_SENTINEL.len() + labels.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for r in 0..rows {
        for c in 0..cols {
            out.extend_from_slice(&(matrix[(r, c)] as f32).to_le_bytes());
        }
    }
    out.extend_from_slice(LABEL_SENTINEL);
    for label in labels {
        out.extend_from_slice(label.as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<LabeledMatrix> {
    let bad = |msg: &str| Error::Parse { path: path.to_path_buf(), line: 0, msg: msg.to_string() };
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("missing SEMSEL01 header"));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body_end = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| bad("header dimensions overflow"))?;
    if bytes.len() < body_end + LABEL_SENTINEL.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}: header declares {rows}x{cols} but file is truncated",
            path.display()
        )));
    }
    let values: Vec<f64> = bytes[16..body_end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if &bytes[body_end..body_end + LABEL_SENTINEL.len()] != LABEL_SENTINEL {
        return Err(bad("missing label sentinel after matrix body"));
    }
    let tail = std::str::from_utf8(&bytes[body_end + LABEL_SENTINEL.len()..])
        .map_err(|_| bad("labels are not UTF-8"))?;
    let tail = tail.strip_suffix('\n').unwrap_or(tail);
    let labels: Vec<String> =
        if tail.is_empty() { Vec::new() } else { tail.split('\n').map(str::to_string).collect() };
    if labels.len() != rows && !labels.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{}: {} labels for {rows} rows",
            path.display(),
            labels.len()
        )));
    }
    Ok(LabeledMatrix { matrix: DMatrix::from_row_slice(rows, cols, &values), labels })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&read(path)?)?)
}

fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("not a number: {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue(format!("{} line {line}", path.display())));
    }
    Ok(v)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))).filter(|(_, l)| !l.is_empty())
}

pub fn read_semantics(path: &Path) -> Result<SemanticSpace> {
    let text = read_string(path)?;
    let mut lines = data_lines(&text);
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let names: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (line, row) in lines {
        let mut fields = row.split(',');
        ids.push(fields.next().unwrap_or_default().trim().to_string());
        let before = values.len();
        for f in fields {
            values.push(parse_f64(f, path, line)?);
        }
        if values.len() - before != names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} line {line}: {} values but header lists {} attributes",
                path.display(),
                values.len() - before,
                names.len()
            )));
        }
    }
    let rows = ids.len();
    SemanticSpace::new(ids, names.clone(), DMatrix::from_row_slice(rows, names.len(), &values))
}

pub fn encode_semantics(s: &SemanticSpace) -> Vec<u8> {
    let mut out = String::from("class_id");
    for n in s.attribute_names() {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (r, id) in s.class_ids().iter().enumerate() {
        out.push_str(id);
        for v in s.matrix().row(r).iter() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn read_visual_csv(path: &Path) -> Result<VisualSet> {
    let text = read_string(path)?;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for (line, row) in data_lines(&text) {
        let mut fields = row.split(',');
        let label = fields.next().unwrap_or_default().trim();
        if line == 1 && label == "label" {
            continue;
        }
        let before = values.len();
        for f in fields {
            values.push(parse_f64(f, path, line)?);
        }
        let w = values.len() - before;
        match width {
            None => width = Some(w),
            Some(prev) if prev != w => {
                return Err(Error::DimensionMismatch(format!(
                    "{} line {line}: {w} features, expected {prev}",
                    path.display()
                )))
            }
            _ => {}
        }
        labels.push(label.to_string());
    }
    let rows = labels.len();
    VisualSet::new(DMatrix::from_row_slice(rows, width.unwrap_or(0), &values), labels)
}

fn read_visual(dir: &Path, stem: &str) -> Result<VisualSet> {
    let bin = dir.join(format!("{stem}.bin"));
    if bin.exists() {
        let m = decode_matrix(&read(&bin)?, &bin)?;
        if m.matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(bin.display().to_string()));
        }
        if m.labels.len() != m.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{}: {} labels for {} rows",
                bin.display(),
                m.labels.len(),
                m.matrix.nrows()
            )));
        }
        return VisualSet::new(m.matrix, m.labels);
    }
    let csv = dir.join(format!("{stem}.csv"));
    if csv.exists() {
        return read_visual_csv(&csv);
    }
    Err(Error::MissingFile(bin))
}

pub fn load_bundle(dir: &Path) -> Result<ZslBundle> {
    let semantics = read_semantics(&dir.join("semantics.csv"))?;
    let train = read_visual(dir, "train")?;
    let test = read_visual(dir, "test")?;
    let split: ClassSplit = read_json(&dir.join("split.json"))?;
    for (set, name) in [(&train, "train"), (&test, "test")] {
        if let Some(label) = set.labels().iter().find(|l| semantics.class_index(l).is_none()) {
            return Err(Error::UnknownLabel { label: label.clone(), context: name.into() });
        }
    }
    ZslBundle::new(semantics, train, test, split)
}

pub fn save_bundle(bundle: &ZslBundle, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("semantics.csv"), &encode_semantics(&bundle.semantics))?;
    write_atomic(&dir.join("train.bin"), &encode_matrix(bundle.train.features(), bundle.train.labels()))?;
    write_atomic(&dir.join("test.bin"), &encode_matrix(bundle.test.features(), bundle.test.labels()))?;
    write_json(&dir.join("split.json"), &bundle.split)
}

/// Content hash identifying a bundle, independent of the on-disk encoding.
pub fn bundle_hash(bundle: &ZslBundle) -> String {
    let mut h = Sha256::new();
    h.update(encode_semantics(&bundle.semantics));
    h.update(encode_matrix(bundle.train.features(), bundle.train.labels()));
    h.update(encode_matrix(bundle.test.features(), bundle.test.labels()));
    h.update(serde_json::to_vec(&bundle.split).expect("split serialises"));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_bundle() -> ZslBundle {
        let semantics = SemanticSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            (0..4).map(|i| format!("attr{i}")).collect(),
            DMatrix::from_row_slice(3, 4, &[1., 0., 0.5, 0.25, 0., 1., 0.75, 0.1, 0.3, 0.3, 0., 1.]),
        )
        .unwrap();
        let train = VisualSet::new(
            DMatrix::from_fn(6, 5, |r, c| (r * 5 + c) as f64 * 0.5),
            ["a", "a", "a", "b", "b", "b"].iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        let test =
            VisualSet::new(DMatrix::from_fn(2, 5, |r, c| (r + c) as f64), vec!["c".into(), "c".into()])
                .unwrap();
        ZslBundle::new(
            semantics,
            train,
            test,
            ClassSplit { seen: vec!["a".into(), "b".into()], unseen: vec!["c".into()] },
        )
        .unwrap()
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = tiny_bundle();
        save_bundle(&b, dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        assert_eq!(back.n_attributes(), 4);
        assert_eq!(back.train.dim(), 5);
        assert_eq!(back.semantics, b.semantics);
        assert_eq!(back.train, b.train);
        assert_eq!(back.test, b.test);
        assert_eq!(bundle_hash(&back), bundle_hash(&b));
    }

    #[test]
    fn header_width_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&tiny_bundle(), dir.path()).unwrap();
        fs::write(dir.path().join("semantics.csv"), "class_id,x,y,z,w\na,1,2,3,4,5\n").unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn unknown_test_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let b = tiny_bundle();
        save_bundle(&b, dir.path()).unwrap();
        let zebra = VisualSet::new(DMatrix::zeros(1, 5), vec!["zebra".into()]).unwrap();
        write_atomic(&dir.path().join("test.bin"), &encode_matrix(zebra.features(), zebra.labels())).unwrap();
        match load_bundle(dir.path()) {
            Err(Error::UnknownLabel { label, .. }) => assert_eq!(label, "zebra"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_files_and_csv_fallback() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::MissingFile(_))));
        let b = tiny_bundle();
        save_bundle(&b, dir.path()).unwrap();
        fs::remove_file(dir.path().join("test.bin")).unwrap();
        fs::write(dir.path().join("test.csv"), "label,f1,f2,f3,f4,f5\nc,0,1,2,3,4\nc,1,2,3,4,5\n")
            .unwrap();
        let back = load_bundle(dir.path()).unwrap();
        assert_eq!(back.test, b.test);
    }

    #[test]
    fn non_finite_feature_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&tiny_bundle(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("test.bin")).unwrap();
        fs::write(dir.path().join("test.csv"), "c,0,1,2,3,NaN\n").unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(Error::NonFiniteValue(_))));
    }

    proptest! {
        #[test]
        fn binary_matrix_round_trips_f32(values in proptest::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 1..40)) {
            let cols = 1 + values.len() % 4;
            let rows = values.len() / cols;
            prop_assume!(rows > 0);
            let m = DMatrix::from_row_slice(rows, cols, &values[..rows * cols].iter().map(|&v| v as f64).collect::<Vec<_>>());
            let labels: Vec<String> = (0..rows).map(|i| format!("l{i}")).collect();
            let back = decode_matrix(&encode_matrix(&m, &labels), Path::new("mem")).unwrap();
            prop_assert_eq!(back.matrix, m);
            prop_assert_eq!(back.labels, labels);
        }
    }
}
