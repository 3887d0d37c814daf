use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::data::{FeatureFormat, SyntheticConfig};
use crate::solver::{KernelChoice, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

impl ReportFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Svg => "scatter.svg",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(format!("unknown report format '{other}' (expected json, csv or svg)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Svg => "svg",
        })
    }
}

/// One domain read from disk. `format` defaults to the one implied by the
/// feature file's extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSpec {
    pub features: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FeatureFormat>,
}

impl FileSpec {
    pub fn resolved_format(&self) -> FeatureFormat {
        self.format.unwrap_or_else(|| FeatureFormat::from_path(&self.features))
    }
}

/// A complete, reproducible experiment. Either `synthetic` or both `source`
/// and `target` must be given. When `synthetic` is used, the top-level `seed`
/// replaces the generator seed. Relative paths are resolved against the
/// working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<FileSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Json]
}

impl Default for ExperimentConfig {
    /// No data source yet; solver defaults, JSON output to `out/`.
    fn default() -> Self {
        Self {
            task: "experiment".to_string(),
            synthetic: None,
            source: None,
            target: None,
            solver: SolverConfig::default(),
            standardize: false,
            output_dir: default_output_dir(),
            formats: default_formats(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// The frozen four-class synthetic benchmark: generator defaults, RBF
    /// kernel with the median-heuristic bandwidth.
    pub fn synthetic_benchmark() -> Self {
        Self {
            task: "synthetic".to_string(),
            synthetic: Some(SyntheticConfig::default()),
            source: None,
            target: None,
            solver: SolverConfig {
                k: 4,
                alpha: 1.0,
                beta: 0.1,
                kernel: KernelChoice::Rbf { gamma: Some(0.1) },
                ..SolverConfig::default()
            },
            standardize: false,
            output_dir: default_output_dir(),
            formats: default_formats(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            ExperimentError::Config(m) => ExperimentError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.formats.is_empty() {
            return bad("at least one report format is required".into());
        }
        match (&self.synthetic, &self.source, &self.target) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => return bad("give either a synthetic spec or source/target files, not both".into()),
            (None, _, _) => return bad("both source and target file specs are required".into()),
        }
        if let Some(spec) = &self.source {
            if spec.labels.is_none() {
                return bad("source labels are required".into());
            }
        }
        self.solver
            .validate()
            .or_else(|e| bad(e.to_string()))
    }
}
