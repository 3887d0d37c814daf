//! Coordinate-descent solver for discriminative, label-consistent domain
//! adaptation.
//!
//! A fit alternates between rebuilding the MMD weights `M*` from the current
//! pseudo-labels, solving the ℓ2,1-regularized label regression for the
//! projection, recomputing the offset and refining the target rows of the
//! label matrix. [`Variant::Dda`] keeps only the distribution-alignment part
//! (a generalized eigenproblem per iteration), [`Variant::Lcr`] only the
//! regression part.

mod fit;
mod kernel;
mod steps;

pub use fit::{fit, fit_kernel, fit_observed, IterationState};
pub use kernel::{kernel_matrix, median_heuristic_gamma};
pub use steps::{
    centered, init_projection, objective, project_to_simplex, projection_pencil, update_labels,
    update_offset, update_projection, ProjectionUpdate,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, LabelMatrix};
use crate::evaluate::EvalError;
use crate::mmd::MmdError;
use crate::numerics::{DenseMatrix, NumericsError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Mmd(#[from] MmdError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("source domain has no labels")]
    MissingSourceLabels,
    #[error("class {class} has no source samples (classes must be 1..=C)")]
    ClassMissingInSource { class: usize },
    #[error("source has {source_dim} features but target has {target_dim}")]
    FeatureDimMismatch { source_dim: usize, target_dim: usize },
    #[error("subspace dimension {k} is smaller than the class count {classes}")]
    SubspaceTooSmall { k: usize, classes: usize },
    #[error("target label {label} is outside 1..={classes}")]
    TargetLabelOutOfRange { label: usize, classes: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite values appeared in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Distribution alignment, repulsion and label regression together.
    #[default]
    Full,
    /// Discriminative distribution alignment only.
    Dda,
    /// Label-consistent regression only (`M* ≡ 0`).
    Lcr,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::Full),
            "dda" => Ok(Variant::Dda),
            "lcr" => Ok(Variant::Lcr),
            other => Err(format!("unknown variant '{other}' (expected full, dda or lcr)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Dda => "dda",
            Variant::Lcr => "lcr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelChoice {
    /// Work on the raw features.
    #[default]
    None,
    /// `K = XᵀX`.
    Linear,
    /// `K_ij = exp(-gamma ‖x_i − x_j‖²)`; `gamma: None` selects the median
    /// heuristic.
    Rbf { gamma: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Subspace dimension.
    pub k: usize,
    /// Frobenius regularization weight.
    pub alpha: f64,
    /// Squared ℓ2,1 regularization weight.
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Smoothing inside the ℓ2,1 row norms.
    pub epsilon: f64,
    pub variant: Variant,
    pub kernel: KernelChoice,
    /// Pencil ridge for the eigenproblems; `None` uses
    /// [`default_ridge`](crate::numerics::default_ridge).
    pub ridge: Option<f64>,
    /// Relative objective change that ends the inner loop early.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 100,
            alpha: 1.0,
            beta: 1.1,
            outer_iters: 10,
            inner_iters: 10,
            epsilon: 1e-8,
            variant: Variant::Full,
            kernel: KernelChoice::None,
            ridge: None,
            tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return bad("iteration counts must be positive");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be a finite nonnegative number");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be a finite nonnegative number");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be nonnegative");
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return bad("ridge must be a finite nonnegative number");
            }
        }
        if let KernelChoice::Rbf { gamma: Some(g) } = self.kernel {
            if !(g > 0.0 && g.is_finite()) {
                return bad("rbf gamma must be positive");
            }
        }
        Ok(())
    }
}

/// Learned projection `A` (`d × k`, with `d = m` on raw features and
/// `d = n` in kernel mode) and offset `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionModel {
    pub projection: DenseMatrix,
    pub offset: DVector<f64>,
    pub kernel_mode: bool,
}

impl ProjectionModel {
    pub fn dim(&self) -> usize {
        self.projection.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    /// Accuracy of the target pseudo-labels, when ground truth was supplied.
    pub target_accuracy: Option<f64>,
    /// Smoothed objective after each inner projection update (empty for DDA).
    pub inner_objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub projection: ProjectionModel,
    pub label_matrix: LabelMatrix,
    pub target_predictions: Vec<usize>,
    /// `Z = AᵀX` (or `AᵀK`), `k × n`.
    pub embedded: DenseMatrix,
    pub history: Vec<IterationRecord>,
    pub classes: usize,
    pub n_source: usize,
    /// RBF bandwidth actually used (explicit or median heuristic).
    pub kernel_gamma: Option<f64>,
    pub warnings: Vec<String>,
}

impl FittedModel {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.history.last().and_then(|r| r.target_accuracy)
    }
}
