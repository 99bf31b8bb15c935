use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path exactly as written in the manifest; doubles as the image id.
    pub id: String,
    /// `id` resolved against the manifest's directory.
    pub path: PathBuf,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }
}

pub fn default_class_names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("class_{k}")).collect()
}

/// Reads a `path,label` CSV. With `num_classes` given, labels must fall in
/// `[0, num_classes)`; otherwise the class count is `max label + 1`.
pub fn load_manifest(path: &Path, num_classes: Option<usize>) -> Result<DatasetManifest> {
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Validation(format!("{}: {other:?}", path.display())),
        })?;
    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.len() != 2 || &header[0] != "path" || &header[1] != "label" {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: format!(
                "expected header `path,label`, found {:?}",
                header.iter().collect::<Vec<_>>()
            ),
        });
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: line,
            column: 1,
            message: e.to_string(),
        })?;
        let id = rec[0].to_string();
        let label: usize = rec[1].parse().map_err(|_| {
            Error::Validation(format!(
                "line {line}: label {:?} is not a class index",
                &rec[1]
            ))
        })?;
        if let Some(c) = num_classes {
            if label >= c {
                return Err(Error::Validation(format!(
                    "line {line}: label {label} outside [0, {c})"
                )));
            }
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Validation(format!(
                "line {line}: duplicate path {id:?}"
            )));
        }
        entries.push(ManifestEntry {
            path: root.join(&id),
            id,
            label,
        });
    }
    let n = num_classes.unwrap_or_else(|| entries.iter().map(|e| e.label + 1).max().unwrap_or(0));
    Ok(DatasetManifest {
        entries,
        class_names: default_class_names(n),
    })
}

/// Writes `path,label` rows for `(relative path, label)` pairs.
pub fn write_manifest(path: &Path, rows: &[(String, usize)]) -> Result<()> {
    let mut out = String::from("path,label\n");
    for (p, l) in rows {
        out.push_str(&format!("{p},{l}\n"));
    }
    crate::fsutil::write_atomic(path, out.as_bytes())
}
