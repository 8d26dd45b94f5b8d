//! Feature files and federation manifests.
//!
//! A feature file is comma-separated UTF-8 text, one sample per line, with an
//! optional header naming the columns. The label column is the one whose
//! header is `label` (configurable), or the last column when there is no
//! header. Labels are arbitrary tokens mapped to dense class indices in order
//! of first appearance unless the manifest declares the class list. Blank
//! lines are ignored.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{split_seed, split_train_test, ClientDataset, Federation};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const DEFAULT_LABEL_COLUMN: &str = "label";

/// Maps label tokens to dense class indices.
#[derive(Debug, Clone, Default)]
pub struct LabelIndex {
    tokens: Vec<String>,
    lookup: HashMap<String, usize>,
    frozen: bool,
}

impl LabelIndex {
    /// An index that grows as new tokens appear.
    pub fn open() -> Self {
        Self::default()
    }

    /// A fixed class list; tokens outside it are rejected.
    pub fn fixed(tokens: &[String]) -> Result<Self> {
        let mut index = Self::open();
        for t in tokens {
            if index.lookup.insert(t.clone(), index.tokens.len()).is_some() {
                return Err(Error::Config(format!("duplicate class token '{t}'")));
            }
            index.tokens.push(t.clone());
        }
        index.frozen = true;
        Ok(index)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn resolve(&mut self, token: &str) -> Option<usize> {
        if let Some(&i) = self.lookup.get(token) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.lookup.insert(token.to_owned(), i);
        Some(i)
    }
}

/// Reads one client's feature file with a fresh label index; the class count
/// is the number of distinct labels seen. The split is left unassigned.
pub fn load_features(path: &Path, client_id: &str) -> Result<ClientDataset> {
    let mut labels = LabelIndex::open();
    let (features, y) = read_feature_file(path, DEFAULT_LABEL_COLUMN, &mut labels)?;
    ClientDataset::new(client_id, features, y, labels.len())
}

/// Reads a feature file, resolving labels through a shared index.
pub fn read_feature_file(
    path: &Path,
    label_column: &str,
    labels: &mut LabelIndex,
) -> Result<(Matrix, Vec<usize>)> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(0, format!("{other:?}")),
        })?;

    let mut width = None;
    let mut label_col = 0;
    let mut data = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let Some(expected) = width else {
            width = Some(record.len());
            if record.len() < 2 {
                return Err(parse_err(line, "need at least one feature and a label".into()));
            }
            match record.iter().position(|f| f == label_column) {
                Some(col) => {
                    label_col = col;
                    continue;
                }
                None => {
                    label_col = record.len() - 1;
                }
            }
            push_row(&record, label_col, labels, &mut data, &mut y).map_err(|m| parse_err(line, m))?;
            continue;
        };
        if record.len() != expected {
            return Err(parse_err(
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        push_row(&record, label_col, labels, &mut data, &mut y).map_err(|m| parse_err(line, m))?;
    }
    if y.is_empty() {
        return Err(parse_err(1, "no samples in feature file".into()));
    }
    let cols = width.unwrap_or(1) - 1;
    Ok((Matrix::from_vec(y.len(), cols, data)?, y))
}

fn push_row(
    record: &csv::StringRecord,
    label_col: usize,
    labels: &mut LabelIndex,
    data: &mut Vec<f64>,
    y: &mut Vec<usize>,
) -> std::result::Result<(), String> {
    for (col, field) in record.iter().enumerate() {
        if col == label_col {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => data.push(v),
            _ => return Err(format!("non-numeric feature '{field}' in column {col}")),
        }
    }
    let token = &record[label_col];
    let class = labels
        .resolve(token)
        .ok_or_else(|| format!("unknown label '{token}'"))?;
    y.push(class);
    Ok(())
}

/// Writes a dataset in feature-file format with a header. Values carry 17
/// significant digits, so reading the file back is lossless.
pub fn write_features(path: &Path, ds: &ClientDataset, label_tokens: &[String]) -> Result<()> {
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    };
    let mut writer = csv::Writer::from_path(path).map_err(to_io)?;
    let mut header: Vec<String> = (0..ds.feature_dim()).map(|i| format!("f{i}")).collect();
    header.push(DEFAULT_LABEL_COLUMN.to_owned());
    writer.write_record(&header).map_err(to_io)?;
    for (row, &label) in ds.features.iter_rows().zip(&ds.labels) {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        fields.push(label_tokens[label].clone());
        writer.write_record(&fields).map_err(to_io)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestClient {
    pub id: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
}

/// `client_id → feature file` pairs plus the shared class universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
    #[serde(default)]
    pub split_seed: u64,
    pub clients: Vec<ManifestClient>,
}

fn default_label_column() -> String {
    DEFAULT_LABEL_COLUMN.to_owned()
}

fn default_train_ratio() -> f64 {
    0.8
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads every client file and applies the stratified split.
    pub fn load(&self, base_dir: &Path) -> Result<Federation> {
        let mut labels = match &self.classes {
            Some(tokens) => {
                if tokens.len() != self.num_classes {
                    return Err(Error::Config(format!(
                        "manifest lists {} classes but num_classes is {}",
                        tokens.len(),
                        self.num_classes
                    )));
                }
                LabelIndex::fixed(tokens)?
            }
            None => LabelIndex::open(),
        };
        let mut clients = Vec::with_capacity(self.clients.len());
        for entry in &self.clients {
            let path = base_dir.join(&entry.path);
            let (features, y) = read_feature_file(&path, &self.label_column, &mut labels)?;
            if labels.len() > self.num_classes {
                return Err(Error::Label(format!(
                    "{}: found {} distinct labels, manifest declares {}",
                    path.display(),
                    labels.len(),
                    self.num_classes
                )));
            }
            clients.push(ClientDataset::new(entry.id.clone(), features, y, self.num_classes)?);
        }
        let clients = clients
            .into_iter()
            .enumerate()
            .map(|(k, ds)| split_train_test(ds, self.train_ratio, split_seed(self.split_seed, k)))
            .collect::<Result<Vec<_>>>()?;
        Federation::new(clients, self.num_classes)
    }
}

pub fn load_manifest(path: &Path) -> Result<Federation> {
    let manifest = Manifest::read(path)?;
    manifest.load(path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_rows_four_features() {
        let f = file("1,2,3,4,a\n5,6,7,8,b\n9,10,11,12,a\n");
        let ds = load_features(f.path(), "c0").unwrap();
        assert_eq!((ds.features.rows(), ds.features.cols()), (3, 4));
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.num_classes, 2);
        assert!(!ds.is_split());
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        let f = file("");
        assert!(matches!(load_features(f.path(), "c"), Err(Error::Parse { .. })));
        let f = file("f0,label\n\n");
        assert!(matches!(load_features(f.path(), "c"), Err(Error::Parse { .. })));
    }

    #[test]
    fn header_selects_label_column_and_first_appearance_order() {
        let f = file("label,f0,f1\ncat,0.5,1\n\ndog,1e-3,2\ncat,3,4\nbird,0,0\n");
        let ds = load_features(f.path(), "c").unwrap();
        assert_eq!(ds.labels, vec![0, 1, 0, 2]);
        assert_eq!(ds.features.row(1), &[1e-3, 2.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let f = file("f0,f1,label\n1,2,a\n1,x,b\n");
        match load_features(f.path(), "c") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("non-numeric"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = file("1,2,a\n1,2\n");
        assert!(matches!(load_features(f.path(), "c"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn fixed_class_list_rejects_unknown_labels() {
        let f = file("1,a\n2,z\n");
        let mut index = LabelIndex::fixed(&["a".into(), "b".into()]).unwrap();
        let err = read_feature_file(f.path(), "label", &mut index).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn write_then_read_is_lossless() {
        let features = Matrix::from_vec(4, 2, vec![0.1, -1.0 / 3.0, 1e-300, 2.5e17, 7.0, -0.0, 3.3, 1.0 / 7.0]).unwrap();
        let ds = ClientDataset::new("c", features, vec![1, 0, 1, 0], 2).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        let tokens = vec!["0".to_owned(), "1".to_owned()];
        write_features(out.path(), &ds, &tokens).unwrap();
        let mut index = LabelIndex::fixed(&tokens).unwrap();
        let (x, y) = read_feature_file(out.path(), "label", &mut index).unwrap();
        assert_eq!(x, ds.features);
        assert_eq!(y, ds.labels);
    }

    #[test]
    fn manifest_loads_a_split_federation() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "f0,label\n1,x\n2,x\n3,y\n4,y\n").unwrap();
        fs::write(dir.path().join("b.csv"), "f0,label\n1,y\n2,y\n3,x\n4,x\n5,x\n").unwrap();
        let manifest = Manifest {
            num_classes: 2,
            classes: None,
            label_column: "label".into(),
            train_ratio: 0.5,
            split_seed: 3,
            clients: vec![
                ManifestClient { id: "a".into(), path: "a.csv".into() },
                ManifestClient { id: "b".into(), path: "b.csv".into() },
            ],
        };
        let path = dir.path().join("manifest.toml");
        manifest.write(&path).unwrap();
        let fed = load_manifest(&path).unwrap();
        assert_eq!(fed.len(), 2);
        // shared first-appearance order across files: x = 0, y = 1
        assert_eq!(fed.clients[1].labels, vec![1, 1, 0, 0, 0]);
        assert!(fed.clients.iter().all(|c| c.is_split()));
    }

    #[test]
    fn manifest_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        fs::write(&path, "num_classes = 2\nclientz = []\n").unwrap();
        assert!(matches!(Manifest::read(&path), Err(Error::Config(_))));
    }
}
