//! Datasets, label matrices, standardization and file ingestion.

mod io;
mod synthetic;

pub use io::{load_features, load_labels, save_features, save_labels, FeatureFormat};
pub use synthetic::{make_synthetic, PortableRng, SyntheticConfig};

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::DenseMatrix;

/// Tolerance on row sums of a [`LabelMatrix`].
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: byte {offset}: {message}")]
    BinaryParse {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("label count {labels} does not match sample count {samples}")]
    LabelCountMismatch { labels: usize, samples: usize },
    #[error("non-finite value at feature {feature}, sample {sample}")]
    NonFiniteValue { feature: usize, sample: usize },
    #[error("label width {width} is smaller than class count {classes}")]
    WidthTooSmall { width: usize, classes: usize },
    #[error("label {label} at position {index} is outside 1..={classes}")]
    LabelOutOfRange {
        label: usize,
        index: usize,
        classes: usize,
    },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("label matrix row {row} is not on the probability simplex")]
    NotOnSimplex { row: usize },
    #[error("invalid synthetic configuration: {0}")]
    InvalidSynthetic(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    Source,
    Target,
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainTag::Source => f.write_str("source"),
            DomainTag::Target => f.write_str("target"),
        }
    }
}

/// Features stored as `m features × n samples`, with optional class labels
/// in `1..=C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DenseMatrix,
    labels: Option<Vec<usize>>,
    domain: DomainTag,
    name: String,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        domain: DomainTag,
        features: DenseMatrix,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, DataError> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(DataError::Empty("dataset needs at least one feature and one sample".into()));
        }
        for sample in 0..features.ncols() {
            for feature in 0..features.nrows() {
                if !features[(feature, sample)].is_finite() {
                    return Err(DataError::NonFiniteValue { feature, sample });
                }
            }
        }
        if let Some(labels) = &labels {
            validate_labels(labels, features.ncols())?;
        }
        Ok(Self {
            features,
            labels,
            domain,
            name: name.into(),
        })
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_features(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.features.ncols()
    }

    /// Largest label present, or 0 for an unlabeled dataset.
    pub fn class_count(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().copied().max())
            .unwrap_or(0)
    }

    pub fn with_domain(mut self, domain: DomainTag) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(self, labels: Vec<usize>) -> Result<Self, DataError> {
        validate_labels(&labels, self.num_samples())?;
        Ok(Self {
            labels: Some(labels),
            ..self
        })
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }
}

fn validate_labels(labels: &[usize], samples: usize) -> Result<(), DataError> {
    if labels.len() != samples {
        return Err(DataError::LabelCountMismatch {
            labels: labels.len(),
            samples,
        });
    }
    let classes = labels.iter().copied().max().unwrap_or(0);
    if let Some(index) = labels.iter().position(|&l| l == 0) {
        return Err(DataError::LabelOutOfRange {
            label: 0,
            index,
            classes,
        });
    }
    Ok(())
}

/// Row-stochastic `n × k` label matrix; the first `C` columns carry classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    values: DenseMatrix,
    class_count: usize,
}

impl LabelMatrix {
    /// Wraps `values`, checking every row is nonnegative and sums to one.
    pub fn new(values: DenseMatrix, class_count: usize) -> Result<Self, DataError> {
        if values.ncols() < class_count {
            return Err(DataError::WidthTooSmall {
                width: values.ncols(),
                classes: class_count,
            });
        }
        for (row, r) in values.row_iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if r.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(DataError::NotOnSimplex { row });
            }
        }
        Ok(Self { values, class_count })
    }

    pub(crate) fn from_parts_unchecked(values: DenseMatrix, class_count: usize) -> Self {
        Self { values, class_count }
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    /// Hard label (1-based) of `row`: argmax over the class columns, ties
    /// going to the smallest class.
    pub fn hard_label(&self, row: usize) -> usize {
        let mut best = 0;
        for c in 1..self.class_count {
            if self.values[(row, c)] > self.values[(row, best)] {
                best = c;
            }
        }
        best + 1
    }

    pub fn hard_labels(&self, rows: std::ops::Range<usize>) -> Vec<usize> {
        rows.map(|r| self.hard_label(r)).collect()
    }
}

/// One-hot encodes `labels` (in `1..=classes`) into `width` columns, padding
/// with `width - classes` zero columns.
pub fn encode_labels(labels: &[usize], classes: usize, width: usize) -> Result<LabelMatrix, DataError> {
    if labels.is_empty() {
        return Err(DataError::Empty("no labels to encode".into()));
    }
    if width < classes {
        return Err(DataError::WidthTooSmall { width, classes });
    }
    let mut values = DenseMatrix::zeros(labels.len(), width);
    for (index, &label) in labels.iter().enumerate() {
        if label == 0 || label > classes {
            return Err(DataError::LabelOutOfRange { label, index, classes });
        }
        values[(index, label - 1)] = 1.0;
    }
    Ok(LabelMatrix { values, class_count: classes })
}

/// Per-feature z-score with population standard deviation. Features with
/// (numerically) zero variance become all zeros.
pub fn standardize(d: &Dataset) -> Dataset {
    let x = d.features();
    let n = x.ncols() as f64;
    let mut out = x.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        let mean = x.row(i).sum() / n;
        let var = x.row(i).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std <= 1e-12 * mean.abs().max(1.0) {
            row.fill(0.0);
        } else {
            row.apply(|v| *v = (*v - mean) / std);
        }
    }
    Dataset {
        features: out,
        labels: d.labels.clone(),
        domain: d.domain,
        name: d.name.clone(),
    }
}
