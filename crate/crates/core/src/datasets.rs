//! Data ingestion, normalization, synthetic data and noise injection.
//!
//! Matrices are stored features × samples: column `i` is sample `x_i`.
//! On disk (CSV) the layout is the usual one sample per row.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{FnmfError, Result};
use crate::seeded_rng;

/// Dense nonnegative data matrix, `d × n` (features × samples).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    labels: Option<Vec<usize>>,
    feature_names: Option<Vec<String>>,
}

impl DataMatrix {
    /// Builds a matrix after checking nonnegativity, shape and label count.
    pub fn new(values: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        let (d, n) = values.dim();
        if d < 1 || n < 2 {
            return Err(FnmfError::domain(format!(
                "data matrix must have d >= 1 and n >= 2, got {d}x{n}"
            )));
        }
        if let Some(((k, i), v)) = values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(FnmfError::domain(format!(
                "entry (feature {k}, sample {i}) = {v} is not a finite nonnegative value"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(FnmfError::domain(format!(
                    "label count {} does not match sample count {n}",
                    l.len()
                )));
            }
        }
        Ok(DataMatrix {
            values,
            labels,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(FnmfError::domain(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Feature dimension `d`.
    pub fn n_features(&self) -> usize {
        self.values.nrows()
    }

    /// Sample count `n`.
    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_value(&self) -> f64 {
        self.values.mean().unwrap_or(0.0)
    }

    /// Replaces the values, keeping labels. Feature names are kept only if
    /// the feature dimension is unchanged.
    fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        let same_d = values.nrows() == self.n_features();
        let mut out = DataMatrix::new(values, self.labels.clone())?;
        if same_d {
            out.feature_names = self.feature_names.clone();
        }
        Ok(out)
    }
}

/// Image geometry used to interpret a feature vector as a row-major
/// `height × width` pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
}

impl ImageShape {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(FnmfError::domain("image height and width must be positive"));
        }
        Ok(ImageShape { height, width })
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}

/// Where the label lives in a CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    #[default]
    None,
    Index(usize),
    Last,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
}

/// Loads a CSV file with one sample per row.
pub fn load_csv(path: impl AsRef<Path>, opts: CsvOptions) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| FnmfError::io(path, e))?;
    read_csv(file, opts)
}

/// Reads CSV records from any reader; see [`load_csv`].
pub fn read_csv<R: Read>(reader: R, opts: CsvOptions) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if opts.has_header {
        Some(rdr.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut width: Option<usize> = None;
    let mut label_idx: Option<usize> = None;
    let mut features: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut n = 0usize;

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data rows, counting a header line if present.
        let line = row + 1 + usize::from(opts.has_header);
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            None => {
                width = Some(record.len());
                label_idx = match opts.label_column {
                    LabelColumn::None => None,
                    LabelColumn::Last => Some(record.len() - 1),
                    LabelColumn::Index(i) if i < record.len() => Some(i),
                    LabelColumn::Index(i) => {
                        return Err(FnmfError::Format {
                            row: line,
                            column: i + 1,
                            message: format!(
                                "label column {i} out of range for {} fields",
                                record.len()
                            ),
                        })
                    }
                };
            }
            Some(w) if w != record.len() => {
                return Err(FnmfError::Format {
                    row: line,
                    column: record.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", record.len()),
                });
            }
            Some(_) => {}
        }

        for (col, field) in record.iter().enumerate() {
            if Some(col) == label_idx {
                labels.push(parse_label(field).ok_or_else(|| FnmfError::Format {
                    row: line,
                    column: col + 1,
                    message: format!("label {field:?} is not a nonnegative integer"),
                })?);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| FnmfError::Format {
                row: line,
                column: col + 1,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(FnmfError::Format {
                    row: line,
                    column: col + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            if v < 0.0 {
                return Err(FnmfError::domain(format!(
                    "negative value {v} at row {line}, column {}",
                    col + 1
                )));
            }
            features.push(v);
        }
        n += 1;
    }

    let Some(width) = width else {
        return Err(FnmfError::Format {
            row: 0,
            column: 0,
            message: "no data rows".into(),
        });
    };
    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(FnmfError::Format {
            row: 0,
            column: 0,
            message: "no feature columns".into(),
        });
    }

    // n × d on disk, d × n in memory.
    let samples =
        Array2::from_shape_vec((n, d), features).map_err(|e| FnmfError::domain(e.to_string()))?;
    let values = samples.reversed_axes().as_standard_layout().to_owned();
    let labels = label_idx.map(|_| labels);
    let mut out = DataMatrix::new(values, labels)?;
    if let Some(h) = header {
        let names: Vec<String> = h
            .into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, s)| s)
            .collect();
        if names.len() == d {
            out = out.with_feature_names(names)?;
        }
    }
    Ok(out)
}

fn parse_label(field: &str) -> Option<usize> {
    if let Ok(v) = field.parse::<usize>() {
        return Some(v);
    }
    let f: f64 = field.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f <= usize::MAX as f64).then_some(f as usize)
}

/// Writes one sample per row with a header; the label (if any) is the last column.
pub fn write_csv(x: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| FnmfError::io(path, e))?;
    write_csv_to(x, file)
}

pub fn write_csv_to<W: Write>(x: &DataMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match x.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..x.n_features()).map(|k| format!("f{k}")).collect(),
    };
    if x.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for i in 0..x.n_samples() {
        let mut row: Vec<String> = x.values.column(i).iter().map(|v| v.to_string()).collect();
        if let Some(l) = x.labels() {
            row.push(l[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| FnmfError::io("<csv writer>", e))?;
    Ok(())
}

/// Scales every sample (column) to unit Euclidean norm. All-zero columns are
/// left as they are and reported with a warning.
pub fn normalize_unit_columns(x: &DataMatrix) -> DataMatrix {
    let mut values = x.values.clone();
    let mut zero_cols = 0usize;
    for mut col in values.axis_iter_mut(Axis(1)) {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|v| v / norm);
        } else {
            zero_cols += 1;
        }
    }
    if zero_cols > 0 {
        log::warn!("normalize_unit_columns: {zero_cols} all-zero sample(s) left unchanged");
    }
    x.with_values(values)
        .expect("scaling preserves the data matrix invariants")
}

/// Class means of the informative dimensions of the synthetic set.
pub const THREE_GAUSSIAN_MEANS: [[f64; 2]; 3] = [[2.0, 2.0], [5.0, 2.0], [3.5, 5.0]];
pub const THREE_GAUSSIAN_STD: f64 = 0.5;
pub const THREE_GAUSSIAN_PER_CLASS: usize = 300;
pub const THREE_GAUSSIAN_NOISE_DIMS: usize = 5;
pub const THREE_GAUSSIAN_NOISE_MAX: f64 = 3.0;

/// Three-class toy set: 900 samples, 7 features. The first two features are
/// class-specific isotropic Gaussians (clipped at 0), the last five are
/// uniform noise on `[0, 3]`. Samples are ordered by class.
pub fn generate_three_gaussian(seed: u64) -> DataMatrix {
    generate_three_gaussian_sized(THREE_GAUSSIAN_PER_CLASS, seed)
}

/// [`generate_three_gaussian`] with `per_class` samples in each class.
/// Panics when `per_class` is 0.
pub fn generate_three_gaussian_sized(per_class: usize, seed: u64) -> DataMatrix {
    assert!(per_class >= 1, "per_class must be >= 1");
    let mut rng = seeded_rng(seed);
    let n = 3 * per_class;
    let d = 2 + THREE_GAUSSIAN_NOISE_DIMS;
    let mut values = Array2::<f64>::zeros((d, n));
    let mut labels = Vec::with_capacity(n);
    let normal = Normal::new(0.0, THREE_GAUSSIAN_STD).expect("valid std");
    for (class, mean) in THREE_GAUSSIAN_MEANS.iter().enumerate() {
        for _ in 0..per_class {
            let i = labels.len();
            for (k, mu) in mean.iter().enumerate() {
                values[[k, i]] = (mu + normal.sample(&mut rng)).max(0.0);
            }
            for k in 2..d {
                values[[k, i]] = rng.random::<f64>() * THREE_GAUSSIAN_NOISE_MAX;
            }
            labels.push(class);
        }
    }
    DataMatrix::new(values, Some(labels)).expect("generator output is valid")
}

/// Appends `count` noise features drawn uniformly from `[0, max(X)]`.
pub fn inject_noise_dims(x: &DataMatrix, count: usize, seed: u64) -> Result<DataMatrix> {
    if count == 0 {
        return Err(FnmfError::domain("noise dimension count must be >= 1"));
    }
    let mut rng = seeded_rng(seed);
    let (d, n) = x.values.dim();
    let hi = x.max_value();
    let mut values = Array2::<f64>::zeros((d + count, n));
    values.slice_mut(s![..d, ..]).assign(&x.values);
    values
        .slice_mut(s![d.., ..])
        .mapv_inplace(|_| rng.random::<f64>() * hi);
    let mut out = DataMatrix::new(values, x.labels.clone())?;
    if let Some(names) = x.feature_names() {
        let mut names = names.to_vec();
        names.extend((0..count).map(|k| format!("noise{k}")));
        out = out.with_feature_names(names)?;
    }
    Ok(out)
}

/// Replaces one randomly placed `block × block` patch per sample with
/// uniform values on `[0, max(X)]`.
pub fn inject_block_occlusion(
    x: &DataMatrix,
    shape: ImageShape,
    block: usize,
    seed: u64,
) -> Result<DataMatrix> {
    if shape.pixels() != x.n_features() {
        return Err(FnmfError::domain(format!(
            "image shape {}x{} does not match feature dimension {}",
            shape.height,
            shape.width,
            x.n_features()
        )));
    }
    if block == 0 || block > shape.height.min(shape.width) {
        return Err(FnmfError::domain(format!(
            "block size {block} must lie in 1..={}",
            shape.height.min(shape.width)
        )));
    }
    let mut rng = seeded_rng(seed);
    let hi = x.max_value();
    let mut values = x.values.clone();
    for mut col in values.axis_iter_mut(Axis(1)) {
        let top = rng.random_range(0..=shape.height - block);
        let left = rng.random_range(0..=shape.width - block);
        for r in top..top + block {
            for c in left..left + block {
                col[r * shape.width + c] = rng.random::<f64>() * hi;
            }
        }
    }
    x.with_values(values)
}

/// Per-class mean and standard deviation of one feature.
pub fn class_feature_stats(x: &DataMatrix, feature: usize) -> Vec<(f64, f64)> {
    let Some(labels) = x.labels() else {
        return Vec::new();
    };
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    (0..classes)
        .map(|c| {
            let vals: Array1<f64> = labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == c)
                .map(|(i, _)| x.values[[feature, i]])
                .collect();
            let mean = vals.mean().unwrap_or(0.0);
            (mean, vals.std(0.0))
        })
        .collect()
}
