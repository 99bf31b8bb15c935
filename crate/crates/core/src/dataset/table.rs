//! Named numeric feature columns keyed by image id, persisted as CSV.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Rectangular table of finite feature values, one row per image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    columns: Vec<String>,
    values: Vec<f64>,
    labels: Option<Vec<usize>>,
    index: HashMap<String, usize>,
}

fn check_token(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains([',', '"', '\n', '\r']) {
        return Err(Error::Validation(format!(
            "{kind} {s:?} must be non-empty and free of commas, quotes and line breaks"
        )));
    }
    Ok(())
}

impl FeatureTable {
    pub fn new(
        ids: Vec<String>,
        columns: Vec<String>,
        values: Vec<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if values.len() != ids.len() * columns.len() {
            return Err(Error::Dimension(format!(
                "{} rows x {} columns needs {} values, got {}",
                ids.len(),
                columns.len(),
                ids.len() * columns.len(),
                values.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != ids.len() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} rows",
                    l.len(),
                    ids.len()
                )));
            }
        }
        let mut seen = HashMap::with_capacity(columns.len());
        for c in &columns {
            check_token("column name", c)?;
            if c == "image_id" || c == "label" || seen.insert(c.as_str(), ()).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate or reserved column {c:?}"
                )));
            }
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            check_token("image id", id)?;
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate image id {id:?}")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let ncol = columns.len();
            return Err(Error::Validation(format!(
                "non-finite value for {:?} in column {:?}",
                ids[pos / ncol],
                columns[pos % ncol]
            )));
        }
        Ok(FeatureTable {
            ids,
            columns,
            values,
            labels,
            index,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.columns.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_by_id(&self, id: &str) -> Option<&[f64]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn label_of(&self, id: &str) -> Option<usize> {
        let i = self.position(id)?;
        self.labels.as_ref().map(|l| l[i])
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|e| Error::io(path, e))?;
        crate::fsutil::write_atomic(path, &buf)
    }

    /// `image_id[,label],<features...>` with 17 significant digits per value.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        write!(w, "image_id")?;
        if self.labels.is_some() {
            write!(w, ",label")?;
        }
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(w, "{id}")?;
            if let Some(l) = &self.labels {
                write!(w, ",{}", l[i])?;
            }
            for v in self.row(i) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file)
    }

    /// Parses the CSV layout written by [`FeatureTable::write_to`]. Rows and
    /// columns in errors are 1-based, the header being row 1.
    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let parse_err = |row: usize, column: usize, message: String| Error::Parse {
            row,
            column,
            message,
        };
        let header = match lines.next() {
            Some(l) => l.map_err(|e| parse_err(1, 1, e.to_string()))?,
            None => return Err(parse_err(1, 1, "missing header".into())),
        };
        let header: Vec<&str> = header.split(',').collect();
        if header[0] != "image_id" {
            return Err(parse_err(
                1,
                1,
                format!("expected image_id, found {:?}", header[0]),
            ));
        }
        let has_label = header.get(1) == Some(&"label");
        let skip = if has_label { 2 } else { 1 };
        let columns: Vec<String> = header[skip..].iter().map(|s| s.to_string()).collect();
        let width = header.len();

        let mut ids = Vec::new();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = i + 2;
            let line = line.map_err(|e| parse_err(row, 1, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != width {
                return Err(parse_err(
                    row,
                    cells.len().min(width) + 1,
                    format!("expected {width} cells, found {}", cells.len()),
                ));
            }
            ids.push(cells[0].to_string());
            if has_label {
                labels.push(cells[1].parse::<usize>().map_err(|_| {
                    parse_err(row, 2, format!("label {:?} is not a class index", cells[1]))
                })?);
            }
            for (j, cell) in cells[skip..].iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| {
                    parse_err(row, j + skip + 1, format!("{cell:?} is not a number"))
                })?;
                if !v.is_finite() {
                    return Err(parse_err(
                        row,
                        j + skip + 1,
                        format!("{cell:?} is not finite"),
                    ));
                }
                values.push(v);
            }
        }
        FeatureTable::new(ids, columns, values, has_label.then_some(labels))
    }

    /// Rows whose ids appear in `ids`, in that order.
    pub fn select_rows(&self, ids: &[String]) -> Result<FeatureTable> {
        let mut values = Vec::with_capacity(ids.len() * self.n_cols());
        let mut labels = Vec::with_capacity(ids.len());
        for id in ids {
            let i = self
                .position(id)
                .ok_or_else(|| Error::Alignment(format!("image id {id:?} not in feature table")))?;
            values.extend_from_slice(self.row(i));
            if let Some(l) = &self.labels {
                labels.push(l[i]);
            }
        }
        FeatureTable::new(
            ids.to_vec(),
            self.columns.clone(),
            values,
            self.labels.is_some().then_some(labels),
        )
    }

    pub fn with_labels(self, labels: Option<Vec<usize>>) -> Result<FeatureTable> {
        FeatureTable::new(self.ids, self.columns, self.values, labels)
    }
}
