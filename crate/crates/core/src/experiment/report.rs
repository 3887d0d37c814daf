use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::evaluate::EvalReport;
use crate::solver::{KernelChoice, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Subspace dimension after clamping.
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub epsilon: f64,
    pub kernel: KernelChoice,
    /// RBF bandwidth actually used.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: String,
    pub variant: Variant,
    pub hyperparameters: Hyperparameters,
    pub n_source: usize,
    pub n_target: usize,
    pub classes: usize,
    pub features: usize,
    /// One entry per outer iteration.
    pub objective: Vec<f64>,
    /// One entry per outer iteration; `null` without target ground truth.
    pub target_accuracy: Vec<Option<f64>>,
    pub final_accuracy: Option<f64>,
    /// 1-NN from raw (possibly standardized) source to target features.
    pub baseline_accuracy: Option<f64>,
    pub evaluation: Option<EvalReport>,
    pub target_predictions: Vec<usize>,
    pub warnings: Vec<String>,
    pub wall_clock_ms: u64,
    pub tool_version: String,
    pub config: ExperimentConfig,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `iteration,objective,target_accuracy`, one row per outer iteration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,target_accuracy\n");
        for (i, (obj, acc)) in self.objective.iter().zip(&self.target_accuracy).enumerate() {
            let acc = acc.map(|a| format!("{a:?}")).unwrap_or_default();
            let _ = writeln!(out, "{},{obj:?},{acc}", i + 1);
        }
        out
    }
}
