//! Datasets, CSV ingestion, z-score normalization and stratified folds.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Floor applied to per-dimension standard deviations so constant columns
/// normalize to 0 instead of NaN.
pub const STD_FLOOR: f64 = 1e-12;

/// A numeric feature matrix with class labels.
///
/// Labels are dense indices into `class_names`; the order of `class_names`
/// is the first-appearance order of the raw labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n_dims: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset from rows. Every row must have the same length, every
    /// label must index `class_names`, and all values must be finite.
    pub fn new(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n_dims = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * n_dims);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_dims {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: n_dims,
                    found: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(name, n_dims, features, labels, class_names)
    }

    /// Build a dataset from a row-major feature buffer.
    pub fn from_flat(
        name: impl Into<String>,
        n_dims: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if n_dims == 0 {
            return Err(Error::InvalidArgument("dataset has no feature columns".into()));
        }
        if features.len() != labels.len() * n_dims {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_dims,
                got: features.len(),
            });
        }
        if class_names.len() < 2 {
            return Err(Error::TooFewClasses {
                found: class_names.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label index {bad} outside class set of size {}",
                class_names.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_dims,
                column: pos % n_dims,
                value: features[pos].to_string(),
            });
        }
        let feature_names = (0..n_dims).map(|j| format!("f{j}")).collect();
        Ok(Self {
            name: name.into(),
            n_dims,
            features,
            labels,
            class_names,
            feature_names,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_dims {
            return Err(Error::DimensionMismatch {
                expected: self.n_dims,
                got: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_dims)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Number of samples per class, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Sample indices of each class, in dataset order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
    }

    /// A new dataset holding the given rows, in the given order. The class
    /// set is kept whole even if some class has no selected rows.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_dims);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            name: self.name.clone(),
            n_dims: self.n_dims,
            features,
            labels,
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    fn map_features(&self, f: impl Fn(usize, f64) -> f64) -> Dataset {
        let n_dims = self.n_dims;
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(pos, &v)| f(pos % n_dims, v))
            .collect();
        Dataset {
            features,
            ..self.clone()
        }
    }

    /// Write the dataset as CSV with a header row; the label is the last column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("class");
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_dims + 1);
        for (row, &label) in self.rows().zip(&self.labels) {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(self.class_names[label].clone());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Which column of a CSV file holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
}

/// CSV dialect: comma separated, an optional single header row, one label
/// column. With `has_header = None` the first row is treated as a header when
/// any of its feature cells fails to parse as a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsvSchema {
    pub has_header: Option<bool>,
    pub label_column: LabelColumn,
}

/// Load a dataset from a CSV file. The dataset is named after the file stem.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, name, schema)
}

/// Parse a dataset from CSV text.
pub fn read_csv<R: Read>(reader: R, name: impl Into<String>, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let records = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    let Some(first) = records.first() else {
        return Err(Error::InvalidArgument("CSV input is empty".into()));
    };
    let n_cols = first.len();
    if n_cols < 2 {
        return Err(Error::InvalidArgument(
            "CSV needs at least one feature column and a label column".into(),
        ));
    }
    let label_col = match schema.label_column {
        LabelColumn::Last => n_cols - 1,
        LabelColumn::Index(i) if i < n_cols => i,
        LabelColumn::Index(i) => {
            return Err(Error::InvalidArgument(format!(
                "label column {i} out of range for {n_cols} columns"
            )))
        }
    };
    let has_header = schema.has_header.unwrap_or_else(|| {
        first
            .iter()
            .enumerate()
            .any(|(j, cell)| j != label_col && cell.parse::<f64>().is_err())
    });

    let mut feature_names = Vec::new();
    let body = if has_header {
        feature_names = first
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_col)
            .map(|(_, s)| s.to_string())
            .collect();
        &records[1..]
    } else {
        &records[..]
    };

    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut features = Vec::with_capacity(body.len() * (n_cols - 1));
    let mut labels = Vec::with_capacity(body.len());
    let row_offset = usize::from(has_header);
    for (r, record) in body.iter().enumerate() {
        let row = r + row_offset;
        if record.len() != n_cols {
            return Err(Error::RaggedRow {
                row,
                expected: n_cols,
                found: record.len(),
            });
        }
        for (column, cell) in record.iter().enumerate() {
            if column == label_col {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column,
                    value: cell.to_string(),
                });
            }
            features.push(value);
        }
        let raw = &record[label_col];
        if raw.is_empty() {
            return Err(Error::EmptyLabel { row });
        }
        let next = class_names.len();
        let id = *class_index.entry(raw.to_string()).or_insert_with(|| {
            class_names.push(raw.to_string());
            next
        });
        labels.push(id);
    }
    if class_names.len() < 2 {
        return Err(Error::TooFewClasses {
            found: class_names.len(),
        });
    }
    let ds = Dataset::from_flat(name, n_cols - 1, features, labels, class_names)?;
    if has_header {
        ds.with_feature_names(feature_names)
    } else {
        Ok(ds)
    }
}

/// Per-dimension z-score parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

/// Fit per-dimension mean and sample standard deviation (n - 1 denominator),
/// flooring the standard deviation at [`STD_FLOOR`].
pub fn fit_zscore(d: &Dataset) -> Result<NormalizationParams> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "z-score fit needs at least 2 samples, got {n}"
        )));
    }
    let mut means = vec![0.0; d.n_dims()];
    for row in d.rows() {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut sq = vec![0.0; d.n_dims()];
    for row in d.rows() {
        for ((s, &v), &m) in sq.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let std_devs = sq
        .into_iter()
        .map(|s| (s / (n - 1) as f64).sqrt().max(STD_FLOOR))
        .collect();
    Ok(NormalizationParams { means, std_devs })
}

impl NormalizationParams {
    pub fn n_dims(&self) -> usize {
        self.means.len()
    }

    fn check(&self, d: &Dataset) -> Result<()> {
        if d.n_dims() != self.n_dims() {
            return Err(Error::DimensionMismatch {
                expected: self.n_dims(),
                got: d.n_dims(),
            });
        }
        Ok(())
    }

    /// Replace every value `x` by `(x - mean) / std`.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        self.check(d)?;
        Ok(d.map_features(|j, v| (v - self.means[j]) / self.std_devs[j]))
    }

    /// Normalize a single feature vector.
    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_dims() {
            return Err(Error::DimensionMismatch {
                expected: self.n_dims(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }

    /// Undo [`NormalizationParams::apply`].
    pub fn invert(&self, d: &Dataset) -> Result<Dataset> {
        self.check(d)?;
        Ok(d.map_features(|j, v| v * self.std_devs[j] + self.means[j]))
    }
}

/// Shorthand for `p.apply(d)`.
pub fn apply_zscore(d: &Dataset, p: &NormalizationParams) -> Result<Dataset> {
    p.apply(d)
}

/// Assignment of every sample to one of `n_folds` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub assignments: Vec<usize>,
    pub n_folds: usize,
    pub seed: u64,
}

/// Shuffle each class with the seeded PRNG and deal its members round-robin
/// over the folds. The dealing position carries over from one class to the
/// next so fold sizes stay balanced overall as well as per class.
pub fn make_stratified_folds(d: &Dataset, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    stratified_folds_for_labels(d.labels(), d.n_classes(), n_folds, seed)
}

pub(crate) fn stratified_folds_for_labels(
    labels: &[usize],
    n_classes: usize,
    n_folds: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if n_folds < 2 || n_folds > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "n_folds must be in [2, {}], got {n_folds}",
            labels.len()
        )));
    }
    let mut members = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = seed::rng(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next_fold = 0;
    for (class, idx) in members.iter_mut().enumerate() {
        if !idx.is_empty() && idx.len() < n_folds {
            log::warn!(
                "class {class} has {} members for {n_folds} folds; some folds get none",
                idx.len()
            );
        }
        idx.shuffle(&mut rng);
        for &i in idx.iter() {
            assignments[i] = next_fold;
            next_fold = (next_fold + 1) % n_folds;
        }
    }
    Ok(FoldPlan {
        assignments,
        n_folds,
        seed,
    })
}

impl FoldPlan {
    /// Indices held out in `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    /// Indices used for training when `fold` is held out, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// Export as `sample_index,fold` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["sample_index", "fold"])?;
        for (i, f) in self.assignments.iter().enumerate() {
            w.write_record([i.to_string(), f.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Import a `sample_index,fold` CSV. The seed is not part of the file and
    /// must be supplied by the caller.
    pub fn read_csv<R: Read>(reader: R, seed: u64) -> Result<FoldPlan> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut pairs = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |column: usize| -> Result<usize> {
                let cell = record.get(column).unwrap_or("");
                cell.parse().map_err(|_| Error::Parse {
                    row: row + 1,
                    column,
                    value: cell.to_string(),
                })
            };
            pairs.push((field(0)?, field(1)?));
        }
        let n = pairs.len();
        let mut assignments = vec![usize::MAX; n];
        for (i, f) in pairs {
            if i >= n || assignments[i] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "fold plan sample index {i} is duplicated or out of range"
                )));
            }
            assignments[i] = f;
        }
        let n_folds = assignments.iter().max().map_or(0, |m| m + 1);
        let plan = FoldPlan {
            assignments,
            n_folds,
            seed,
        };
        if plan.fold_sizes().contains(&0) {
            return Err(Error::InvalidArgument("fold plan has an empty fold".into()));
        }
        Ok(plan)
    }
}
