//! Experiment runner: config files, data loading, a solver run and the
//! resulting reports (`report.json`, `report.csv`, `scatter.svg`).
//!
//! All outputs are rendered in memory first and only then moved into the
//! output directory, so a failing run leaves no files behind.

mod config;
mod report;
mod scatter;

pub use config::{ExperimentConfig, FileSpec, ReportFormat};
pub use report::{Hyperparameters, Report};
pub use scatter::render_scatter;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::data::{load_features, make_synthetic, standardize, DataError, Dataset, DomainTag};
use crate::evaluate::{nn_predict, score};
use crate::solver::{fit, FittedModel, SolverError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) => "config",
            ExperimentError::Data(_) | ExperimentError::Output { .. } => "data",
            ExperimentError::Solver(_) => "solver",
        }
    }

    /// Process exit status: 2 config, 3 data and I/O, 4 solver.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            "data" => 3,
            _ => 4,
        }
    }

    /// Single-line `key=value` diagnostic; the message is a JSON string.
    pub fn diagnostic(&self) -> String {
        format!(
            "error kind={} code={} message={}",
            self.kind(),
            self.exit_code(),
            serde_json::to_string(&self.to_string()).expect("string serializes")
        )
    }
}

/// Loads or synthesizes the two domains described by `cfg`, standardizing
/// each domain separately when requested.
pub fn load_domains(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset), ExperimentError> {
    let (source, target) = match (&cfg.synthetic, &cfg.source, &cfg.target) {
        (Some(synth), _, _) => {
            let synth = crate::data::SyntheticConfig {
                seed: cfg.seed,
                ..synth.clone()
            };
            make_synthetic(&synth)?
        }
        (None, Some(s), Some(t)) => {
            let source = load_features(&s.features, s.labels.as_deref(), s.resolved_format())?;
            let target = load_features(&t.features, t.labels.as_deref(), t.resolved_format())?
                .with_domain(DomainTag::Target);
            (source, target)
        }
        _ => return Err(ExperimentError::Config("no data source configured".into())),
    };
    if source.num_features() != target.num_features() {
        return Err(ExperimentError::Config(format!(
            "source has {} features but target has {}",
            source.num_features(),
            target.num_features()
        )));
    }
    if cfg.standardize {
        Ok((standardize(&source), standardize(&target)))
    } else {
        Ok((source, target))
    }
}

fn baseline_accuracy(source: &Dataset, target: &Dataset, classes: usize) -> Result<Option<f64>, ExperimentError> {
    let (Some(train_labels), Some(truth)) = (source.labels(), target.labels()) else {
        return Ok(None);
    };
    let predictions = nn_predict(source.features(), train_labels, target.features())
        .map_err(SolverError::from)?;
    Ok(Some(score(&predictions, truth, classes).map_err(SolverError::from)?.accuracy))
}

/// Result of [`execute`]: the report plus the rendered output files.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub model: FittedModel,
    pub files: Vec<(ReportFormat, Vec<u8>)>,
}

/// Runs the experiment without touching the file system beyond reading
/// inputs.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let (source, target) = load_domains(cfg)?;
    let model = fit(&source, &target, &cfg.solver)?;
    let classes = model.classes;
    let baseline = baseline_accuracy(&source, &target, classes)?;
    let evaluation = match target.labels() {
        Some(truth) => Some(score(&model.target_predictions, truth, classes).map_err(SolverError::from)?),
        None => None,
    };

    let solver = &cfg.solver;
    let mut report = Report {
        task: cfg.task.clone(),
        variant: solver.variant,
        hyperparameters: Hyperparameters {
            k: model.projection.dim(),
            alpha: solver.alpha,
            beta: solver.beta,
            outer_iters: solver.outer_iters,
            inner_iters: solver.inner_iters,
            epsilon: solver.epsilon,
            kernel: solver.kernel,
            gamma: model.kernel_gamma,
        },
        n_source: source.num_samples(),
        n_target: target.num_samples(),
        classes,
        features: source.num_features(),
        objective: model.history.iter().map(|r| r.objective).collect(),
        target_accuracy: model.history.iter().map(|r| r.target_accuracy).collect(),
        final_accuracy: model.final_accuracy(),
        baseline_accuracy: baseline,
        evaluation,
        target_predictions: model.target_predictions.clone(),
        warnings: model.warnings.clone(),
        wall_clock_ms: 0,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
    };

    let mut formats = cfg.formats.clone();
    formats.sort();
    formats.dedup();
    let mut files = Vec::with_capacity(formats.len());
    for &format in &formats {
        let bytes = match format {
            ReportFormat::Json => continue,
            ReportFormat::Csv => report.to_csv().into_bytes(),
            ReportFormat::Svg => {
                let labels_s = source.labels().unwrap_or_default();
                let labels_t = target.labels().unwrap_or(&model.target_predictions);
                render_scatter(&model.embedded, labels_s, labels_t)
                    .ok_or_else(|| {
                        ExperimentError::Config(format!(
                            "scatter plot needs a subspace of at least 2 dimensions (k = {})",
                            model.projection.dim()
                        ))
                    })?
                    .into_bytes()
            }
        };
        files.push((format, bytes));
    }
    report.wall_clock_ms = started.elapsed().as_millis() as u64;
    if formats.contains(&ReportFormat::Json) {
        files.insert(0, (ReportFormat::Json, report.to_json().into_bytes()));
    }
    Ok(Outcome { report, model, files })
}

/// Writes every file into `dir` atomically: each goes to a temporary file in
/// the same directory first, and nothing is renamed into place unless all
/// writes succeeded.
pub fn write_outputs(dir: &Path, files: &[(ReportFormat, Vec<u8>)]) -> Result<Vec<PathBuf>, ExperimentError> {
    let out_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Output { path, source }
    };
    std::fs::create_dir_all(dir).map_err(out_err(dir))?;
    let mut staged = Vec::with_capacity(files.len());
    for (format, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(out_err(dir))?;
        tmp.write_all(bytes).map_err(out_err(tmp.path()))?;
        tmp.flush().map_err(out_err(tmp.path()))?;
        staged.push((tmp, dir.join(format.file_name())));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| ExperimentError::Output {
            path: path.clone(),
            source: e.error,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// [`execute`] followed by [`write_outputs`] into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, ExperimentError> {
    let outcome = execute(cfg)?;
    write_outputs(&cfg.output_dir, &outcome.files)?;
    Ok(outcome.report)
}

/// Writes a scatter plot of `embedded` (source columns first) to `path`.
pub fn emit_scatter(
    embedded: &crate::numerics::DenseMatrix,
    labels_s: &[usize],
    labels_t: &[usize],
    path: &Path,
) -> Result<(), ExperimentError> {
    let svg = render_scatter(embedded, labels_s, labels_t).ok_or_else(|| {
        ExperimentError::Config("scatter plot needs at least 2 rows and one label per column".into())
    })?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|source| ExperimentError::Output {
        path: dir.clone(),
        source,
    })?;
    let io = |source| ExperimentError::Output {
        path: path.to_path_buf(),
        source,
    };
    tmp.write_all(svg.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
