//! Nearest-neighbour classification and accuracy reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::DenseMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: {predictions} predictions for {truth} labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("label {label} at position {index} is outside 1..={classes}")]
    LabelOutOfRange {
        label: usize,
        index: usize,
        classes: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Accuracy per true class; classes absent from the truth are omitted.
    pub per_class_accuracy: BTreeMap<usize, f64>,
    /// `confusion[t][p]` counts samples of true class `t + 1` predicted as `p + 1`.
    pub confusion: Vec<Vec<usize>>,
    pub n_evaluated: usize,
}

/// Labels each query column with the label of its Euclidean-nearest training
/// column. Ties go to the smallest training index.
pub fn nn_predict(
    train: &DenseMatrix,
    train_labels: &[usize],
    query: &DenseMatrix,
) -> Result<Vec<usize>, EvalError> {
    if train.ncols() == 0 || train_labels.len() != train.ncols() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} training points with {} labels",
            train.ncols(),
            train_labels.len()
        )));
    }
    if train.nrows() != query.nrows() {
        return Err(EvalError::DimensionMismatch(format!(
            "training points are {}-dimensional, queries {}-dimensional",
            train.nrows(),
            query.nrows()
        )));
    }
    let predictions = query
        .column_iter()
        .map(|q| {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (i, t) in train.column_iter().enumerate() {
                let mut d = 0.0;
                for (a, b) in q.iter().zip(t.iter()) {
                    d += (a - b) * (a - b);
                }
                if d < best_dist {
                    best_dist = d;
                    best = i;
                }
            }
            train_labels[best]
        })
        .collect();
    Ok(predictions)
}

/// Scores `predictions` against `truth`, both in `1..=classes`.
pub fn score(predictions: &[usize], truth: &[usize], classes: usize) -> Result<EvalReport, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    for (index, &label) in truth.iter().chain(predictions.iter()).enumerate() {
        if label == 0 || label > classes {
            return Err(EvalError::LabelOutOfRange {
                label,
                index: index % truth.len().max(1),
                classes,
            });
        }
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        confusion[t - 1][p - 1] += 1;
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let n = truth.len();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .filter_map(|(c, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| (c + 1, row[c] as f64 / total as f64))
        })
        .collect();
    Ok(EvalReport {
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        per_class_accuracy,
        confusion,
        n_evaluated: n,
    })
}
