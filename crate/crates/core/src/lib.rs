//! Discriminative label consistent domain adaptation.
//!
//! Learns a linear (or kernelized) projection under which source and target
//! feature distributions match, classes are pushed apart, and labels can be
//! regressed consistently across domains. Unlabeled target samples receive
//! pseudo-labels that are refined every iteration.
//!
//! Data matrices are `features × samples`; source samples come first.

pub mod data;
pub mod evaluate;
pub mod experiment;
pub mod mmd;
pub mod numerics;
pub mod solver;

pub use data::{Dataset, DomainTag, LabelMatrix};
pub use numerics::DenseMatrix;
pub use solver::{fit, fit_kernel, FittedModel, KernelChoice, SolverConfig, Variant};
