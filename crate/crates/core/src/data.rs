//! Datasets: CSV ingestion driven by a small schema file, min-max
//! normalization, seeded splits and the resampled XOR training set.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seed;

/// Rows drawn per XOR epoch.
pub const XOR_EPOCH_LEN: usize = 200;

/// The four XOR patterns and their labels.
pub const XOR_TABLE: [([f64; 2], usize); 4] = [
    ([0.0, 0.0], 0),
    ([0.0, 1.0], 1),
    ([1.0, 0.0], 1),
    ([1.0, 1.0], 0),
];

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{origin}: row {row}: {message}")]
    Row {
        origin: String,
        row: u64,
        message: String,
    },
    #[error("{origin}: no usable rows")]
    Empty { origin: String },
    #[error("schema {origin}, line {line}: {message}")]
    Schema {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("split error: {0}")]
    Split(String),
}

/// Labelled samples with features normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_count: usize,
    class_names: Vec<String>,
    /// Per-column `(min, max)` of the raw values the normalization used.
    feature_ranges: Vec<(f64, f64)>,
    /// Values clamped into `[0, 1]` because they fell outside
    /// `feature_ranges` (non-zero only for sets normalized with another
    /// set's ranges).
    clamped: usize,
}

fn column_ranges(raw: &[Vec<f64>], width: usize) -> Vec<(f64, f64)> {
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
    for row in raw {
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }
    ranges
}

fn normalize_value(v: f64, (min, max): (f64, f64)) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        0.0
    }
}

fn denormalize_value(v: f64, (min, max): (f64, f64)) -> f64 {
    if max > min {
        min + v * (max - min)
    } else {
        min
    }
}

impl Dataset {
    /// Normalizes `raw` with its own per-column ranges.
    pub fn from_raw(
        name: impl Into<String>,
        raw: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let width = raw.first().map_or(0, Vec::len);
        let ranges = column_ranges(&raw, width);
        Self::with_ranges(name, raw, labels, class_names, ranges)
    }

    /// Normalizes `raw` with externally supplied ranges, clamping anything
    /// that falls outside them.
    pub fn with_ranges(
        name: impl Into<String>,
        raw: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        ranges: Vec<(f64, f64)>,
    ) -> Result<Self, DataError> {
        let class_count = class_names.len();
        if class_count == 0 {
            return Err(DataError::Invalid("at least one class is required".into()));
        }
        if raw.len() != labels.len() {
            return Err(DataError::Invalid(format!(
                "{} feature rows but {} labels",
                raw.len(),
                labels.len()
            )));
        }
        let width = ranges.len();
        if let Some(pos) = raw.iter().position(|r| r.len() != width) {
            return Err(DataError::Invalid(format!(
                "row {pos} has {} features, expected {width}",
                raw[pos].len()
            )));
        }
        if let Some(pos) = labels.iter().position(|&c| c >= class_count) {
            return Err(DataError::Invalid(format!(
                "label {} at row {pos} is outside [0, {class_count})",
                labels[pos]
            )));
        }
        if raw.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite feature value".into()));
        }
        let mut clamped = 0;
        let features = raw
            .into_iter()
            .map(|row| {
                row.iter()
                    .zip(&ranges)
                    .map(|(&v, &r)| {
                        let n = normalize_value(v, r);
                        if n < 0.0 || n > 1.0 {
                            clamped += 1;
                        }
                        n.clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            name: name.into(),
            features,
            labels,
            class_count,
            class_names,
            feature_ranges: ranges,
            clamped,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_ranges.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_ranges(&self) -> &[(f64, f64)] {
        &self.feature_ranges
    }

    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> (&[f64], usize) {
        (&self.features[i], self.labels[i])
    }

    /// A single class makes accuracy meaningless.
    pub fn is_degenerate(&self) -> bool {
        self.class_count < 2 || self.labels.iter().collect::<BTreeSet<_>>().len() < 2
    }

    /// Features mapped back to raw units.
    pub fn denormalized(&self) -> Vec<Vec<f64>> {
        self.features
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.feature_ranges)
                    .map(|(&v, &r)| denormalize_value(v, r))
                    .collect()
            })
            .collect()
    }

    fn subset(&self, name: &str, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>, String) {
        let raw = self.denormalized();
        (
            idx.iter().map(|&i| raw[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            format!("{}-{name}", self.name),
        )
    }
}

/// Network target for a class label: a single 0/1 output when the network
/// has one output unit, one-hot otherwise.
pub fn target_vector(label: usize, outputs: usize) -> Vec<f64> {
    if outputs == 1 {
        vec![if label > 0 { 1.0 } else { 0.0 }]
    } else {
        (0..outputs).map(|c| if c == label { 1.0 } else { 0.0 }).collect()
    }
}

/// The four-row XOR table as a dataset.
pub fn xor_table() -> Dataset {
    let raw = XOR_TABLE.iter().map(|(x, _)| x.to_vec()).collect();
    let labels = XOR_TABLE.iter().map(|&(_, y)| y).collect();
    Dataset::with_ranges("xor", raw, labels, vec!["0".into(), "1".into()], vec![(0.0, 1.0); 2])
        .expect("static table is valid")
}

/// 200 rows drawn uniformly with replacement from the XOR table,
/// deterministic per `(seed, epoch)`.
pub fn xor_epoch(seed: u64, epoch: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[seed::stream::DATA, epoch as u64]));
    let mut raw = Vec::with_capacity(XOR_EPOCH_LEN);
    let mut labels = Vec::with_capacity(XOR_EPOCH_LEN);
    for _ in 0..XOR_EPOCH_LEN {
        let (x, y) = XOR_TABLE[rng.random_range(0..4)];
        raw.push(x.to_vec());
        labels.push(y);
    }
    Dataset::with_ranges("xor", raw, labels, vec!["0".into(), "1".into()], vec![(0.0, 1.0); 2])
        .expect("static table is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Test values clamped into `[0, 1]` after applying the train ranges.
    pub clamped: usize,
}

fn take_count(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).round() as usize
}

/// Seeded, optionally stratified train/test partition. Normalization is
/// recomputed from the training rows and applied to the test rows.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<Split, DataError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::Split(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    if data.len() < 2 {
        return Err(DataError::Split(format!("need at least 2 samples, got {}", data.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[seed::stream::SPLIT]));
    let (mut train_idx, mut test_idx) = (Vec::new(), Vec::new());
    if spec.stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &c) in data.labels.iter().enumerate() {
            by_class.entry(c).or_default().push(i);
        }
        for (class, mut idx) in by_class {
            if idx.len() < 2 {
                return Err(DataError::Split(format!(
                    "class {class} ({}) has {} sample(s); stratification needs at least 2",
                    data.class_names[class],
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            let n = take_count(idx.len(), spec.train_fraction).clamp(1, idx.len() - 1);
            train_idx.extend_from_slice(&idx[..n]);
            test_idx.extend_from_slice(&idx[n..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.shuffle(&mut rng);
        let n = take_count(idx.len(), spec.train_fraction).clamp(1, idx.len() - 1);
        train_idx.extend_from_slice(&idx[..n]);
        test_idx.extend_from_slice(&idx[n..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let (raw, labels, name) = data.subset("train", &train_idx);
    let train = Dataset::from_raw(name, raw, labels, data.class_names.clone())?;
    let (raw, labels, name) = data.subset("test", &test_idx);
    let test = Dataset::with_ranges(
        name,
        raw,
        labels,
        data.class_names.clone(),
        train.feature_ranges.clone(),
    )?;
    let clamped = test.clamped;
    Ok(Split { train, test, clamped })
}

/// Where a column of the CSV goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Numeric,
    Categorical,
    Label,
    Ignore,
}

/// Declarative description of a CSV file's columns.
///
/// ```text
/// # comment
/// name = car
/// file = car.data
/// header = false
/// columns = 7
/// label = 6                 # or `last`
/// categorical = 0,1,2,3,4,5
/// ignore =
/// missing = ?
/// label_bins = 8.5,10.5     # numeric label -> 3 classes
/// levels.0 = low|med|high|vhigh
/// classes = unacc|acc|good|vgood
/// ```
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    pub name: String,
    /// Data file, relative to the schema's directory.
    pub file: Option<String>,
    pub header: bool,
    pub delimiter: u8,
    /// Split on runs of whitespace instead of `delimiter`.
    pub whitespace: bool,
    pub columns: Option<usize>,
    pub label: LabelColumn,
    pub categorical: BTreeSet<usize>,
    pub ignore: BTreeSet<usize>,
    pub missing: Vec<String>,
    /// Ordered levels for categorical columns; undeclared columns use the
    /// sorted set of observed values.
    pub levels: BTreeMap<usize, Vec<String>>,
    /// Ordered class names; undeclared means sorted observed values.
    pub classes: Option<Vec<String>>,
    /// Ascending cut points turning a numeric label into classes:
    /// class `c` holds values with exactly `c` cut points strictly below.
    pub label_bins: Option<Vec<f64>>,
    /// Directory the schema was read from.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    Index(usize),
    #[default]
    Last,
}

fn parse_index_list(v: &str) -> Result<BTreeSet<usize>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("`{s}` is not a column index")))
        .collect()
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_names(v: &str) -> Vec<String> {
    v.split('|').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl Schema {
    pub fn parse(text: &str, origin: &str) -> Result<Self, DataError> {
        let mut schema = Schema {
            delimiter: b',',
            missing: vec!["?".into()],
            ..Schema::default()
        };
        for (n, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| DataError::Schema {
                origin: origin.to_string(),
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "name" => schema.name = value.to_string(),
                "file" => schema.file = Some(value.to_string()),
                "header" => schema.header = parse_bool(value).map_err(err)?,
                "delimiter" if value == "whitespace" => schema.whitespace = true,
                "delimiter" => {
                    schema.delimiter = match value {
                        "tab" | "\\t" => b'\t',
                        "space" => b' ',
                        v if v.len() == 1 => v.as_bytes()[0],
                        v => return Err(err(format!("delimiter must be one byte, got `{v}`"))),
                    }
                }
                "columns" => {
                    schema.columns =
                        Some(value.parse().map_err(|_| err(format!("bad column count `{value}`")))?)
                }
                "label" => {
                    schema.label = if value == "last" {
                        LabelColumn::Last
                    } else {
                        LabelColumn::Index(
                            value.parse().map_err(|_| err(format!("bad label column `{value}`")))?,
                        )
                    }
                }
                "categorical" => schema.categorical = parse_index_list(value).map_err(err)?,
                "ignore" => schema.ignore = parse_index_list(value).map_err(err)?,
                "missing" => schema.missing = parse_names(value),
                "classes" => schema.classes = Some(parse_names(value)),
                "label_bins" => {
                    let cuts = value
                        .split(',')
                        .map(|c| c.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| err(format!("bad label_bins `{value}`")))?;
                    if cuts.is_empty() || cuts.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(err("label_bins must be ascending".into()));
                    }
                    schema.label_bins = Some(cuts);
                }
                k if k.starts_with("levels.") => {
                    let col = k["levels.".len()..]
                        .parse()
                        .map_err(|_| err(format!("bad levels key `{k}`")))?;
                    schema.levels.insert(col, parse_names(value));
                    schema.categorical.insert(col);
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut schema = Self::parse(&text, &path.display().to_string())?;
        schema.base_dir = path.parent().map(Path::to_path_buf);
        if schema.name.is_empty() {
            schema.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(schema)
    }

    /// Data file named by the schema, resolved against its directory.
    pub fn data_path(&self) -> Option<PathBuf> {
        let file = self.file.as_ref()?;
        Some(match &self.base_dir {
            Some(dir) => dir.join(file),
            None => PathBuf::from(file),
        })
    }

    fn role(&self, col: usize, label: usize) -> ColumnRole {
        if col == label {
            ColumnRole::Label
        } else if self.ignore.contains(&col) {
            ColumnRole::Ignore
        } else if self.categorical.contains(&col) {
            ColumnRole::Categorical
        } else {
            ColumnRole::Numeric
        }
    }
}

/// Category vocabularies learned (or declared) while loading, reusable to
/// load further files with the same codes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Encoding {
    pub levels: BTreeMap<usize, Vec<String>>,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub encoding: Encoding,
    /// 1-based line numbers of rows dropped for missing values.
    pub rejected_rows: Vec<u64>,
}

fn sorted_levels(values: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().collect();
    if v.iter().all(|s| s.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    v
}

fn bin_names(cuts: &[f64]) -> Vec<String> {
    let mut names = vec![format!("<={}", cuts[0])];
    for w in cuts.windows(2) {
        names.push(format!("({},{}]", w[0], w[1]));
    }
    names.push(format!(">{}", cuts[cuts.len() - 1]));
    names
}

/// Reads a CSV file described by `schema`.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Loaded, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, schema, None, &path.display().to_string())
}

/// Reads a CSV file with a fixed category encoding; unseen categories or
/// classes are errors.
pub fn load_csv_with_encoding(
    path: &Path,
    schema: &Schema,
    encoding: &Encoding,
) -> Result<Loaded, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, schema, Some(encoding), &path.display().to_string())
}

/// Parses CSV text. `fixed` pins the category codes.
pub fn parse_csv(
    text: &str,
    schema: &Schema,
    fixed: Option<&Encoding>,
    origin: &str,
) -> Result<Loaded, DataError> {
    let collapsed;
    let text = if schema.whitespace {
        collapsed = text
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n");
        collapsed.as_str()
    } else {
        text
    };
    let delimiter = if schema.whitespace { b',' } else { schema.delimiter };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.header)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let row_err = |row: u64, message: String| DataError::Row {
        origin: origin.to_string(),
        row,
        message,
    };

    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    let mut rejected = Vec::new();
    let mut width = schema.columns;
    for record in reader.records() {
        let record = record.map_err(|source| DataError::Csv {
            path: origin.to_string(),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(row_err(line, format!("expected {w} fields, found {}", record.len())));
        }
        if record.iter().any(|f| f.is_empty() || schema.missing.iter().any(|m| m == f)) {
            rejected.push(line);
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    let width = match width {
        Some(w) if !rows.is_empty() => w,
        _ => return Err(DataError::Empty { origin: origin.to_string() }),
    };
    let label_col = match schema.label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if i < width => i,
        LabelColumn::Index(i) => {
            return Err(DataError::Invalid(format!(
                "label column {i} out of range for {width} columns"
            )))
        }
    };
    let roles: Vec<ColumnRole> = (0..width).map(|c| schema.role(c, label_col)).collect();

    // vocabularies
    let mut encoding = Encoding::default();
    for (c, role) in roles.iter().enumerate() {
        if *role != ColumnRole::Categorical {
            continue;
        }
        let levels = match (fixed.and_then(|e| e.levels.get(&c)), schema.levels.get(&c)) {
            (Some(l), _) | (None, Some(l)) => l.clone(),
            (None, None) => sorted_levels(rows.iter().map(|(_, r)| r[c].clone()).collect()),
        };
        encoding.levels.insert(c, levels);
    }
    encoding.classes = match (fixed, &schema.classes, &schema.label_bins) {
        (Some(e), _, _) => e.classes.clone(),
        (None, Some(c), _) => c.clone(),
        (None, None, Some(cuts)) => bin_names(cuts),
        (None, None, None) => {
            sorted_levels(rows.iter().map(|(_, r)| r[label_col].clone()).collect())
        }
    };

    let mut raw = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        let mut feats = Vec::with_capacity(width);
        for (c, field) in row.iter().enumerate() {
            match roles[c] {
                ColumnRole::Ignore => {}
                ColumnRole::Label if schema.label_bins.is_some() => {
                    let cuts = schema.label_bins.as_ref().expect("guarded");
                    let v: f64 = field.parse().map_err(|_| {
                        row_err(*line, format!("label `{field}` is not a number"))
                    })?;
                    labels.push(cuts.iter().filter(|&&c| c < v).count());
                }
                ColumnRole::Label => {
                    let class = encoding
                        .classes
                        .iter()
                        .position(|n| n == field)
                        .ok_or_else(|| row_err(*line, format!("unknown class `{field}`")))?;
                    labels.push(class);
                }
                ColumnRole::Categorical => {
                    let code = encoding.levels[&c]
                        .iter()
                        .position(|n| n == field)
                        .ok_or_else(|| {
                            row_err(*line, format!("unknown category `{field}` in column {c}"))
                        })?;
                    feats.push(code as f64);
                }
                ColumnRole::Numeric => {
                    let v: f64 = field.parse().map_err(|_| {
                        row_err(*line, format!("column {c}: `{field}` is not a number"))
                    })?;
                    if !v.is_finite() {
                        return Err(row_err(*line, format!("column {c}: non-finite value")));
                    }
                    feats.push(v);
                }
            }
        }
        raw.push(feats);
    }
    let name = if schema.name.is_empty() { origin.to_string() } else { schema.name.clone() };
    let dataset = Dataset::from_raw(name, raw, labels, encoding.classes.clone())?;
    Ok(Loaded {
        dataset,
        encoding,
        rejected_rows: rejected,
    })
}
