use nalgebra::DVector;

use super::steps::{
    init_projection, objective, projection_pencil, update_labels, update_offset, update_projection,
};
use super::{
    kernel_matrix, FittedModel, IterationRecord, KernelChoice, ProjectionModel, SolverConfig,
    SolverError, Variant,
};
use crate::data::{encode_labels, Dataset, LabelMatrix};
use crate::evaluate::{nn_predict, score};
use crate::mmd::{build_marginal, build_weights};
use crate::numerics::{default_ridge, sym_geig_smallest, DenseMatrix};

/// Snapshot handed to a [`fit_observed`] callback after every outer
/// iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    pub iteration: usize,
    pub label_matrix: &'a LabelMatrix,
    pub pseudo_labels: &'a [usize],
    pub projection: &'a DenseMatrix,
    pub mstar: &'a DenseMatrix,
    pub record: &'a IterationRecord,
}

// Everything the iteration needs, with X already replaced by K in kernel mode.
pub(super) struct Problem {
    pub data: DenseMatrix,
    pub n_source: usize,
    pub classes: usize,
    pub source_labels: Vec<usize>,
    pub target_truth: Option<Vec<usize>>,
    pub kernel_mode: bool,
    pub kernel_gamma: Option<f64>,
    pub k: usize,
    pub warnings: Vec<String>,
}

impl Problem {
    fn n(&self) -> usize {
        self.data.ncols()
    }

    fn n_target(&self) -> usize {
        self.n() - self.n_source
    }

    fn accuracy(&self, predictions: &[usize]) -> Result<Option<f64>, SolverError> {
        match &self.target_truth {
            Some(truth) => Ok(Some(score(predictions, truth, self.classes)?.accuracy)),
            None => Ok(None),
        }
    }

    /// 1-NN from projected source samples to projected target samples.
    fn nearest_neighbour_labels(&self, embedded: &DenseMatrix) -> Result<Vec<usize>, SolverError> {
        let train = embedded.columns(0, self.n_source).into_owned();
        let query = embedded.columns(self.n_source, self.n_target()).into_owned();
        Ok(nn_predict(&train, &self.source_labels, &query)?)
    }

    fn ridge(&self, cfg: &SolverConfig, b: &DenseMatrix) -> f64 {
        cfg.ridge.unwrap_or_else(|| default_ridge(b))
    }
}

fn prepare(source: &Dataset, target: &Dataset, cfg: &SolverConfig) -> Result<Problem, SolverError> {
    cfg.validate()?;
    let source_labels = source
        .labels()
        .ok_or(SolverError::MissingSourceLabels)?
        .to_vec();
    if source.num_features() != target.num_features() {
        return Err(SolverError::FeatureDimMismatch {
            source_dim: source.num_features(),
            target_dim: target.num_features(),
        });
    }
    let classes = source.class_count();
    let mut present = vec![false; classes];
    for &l in &source_labels {
        present[l - 1] = true;
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(SolverError::ClassMissingInSource { class: missing + 1 });
    }
    let target_truth = match target.labels() {
        Some(t) => {
            if let Some(&bad) = t.iter().find(|&&l| l > classes) {
                return Err(SolverError::TargetLabelOutOfRange { label: bad, classes });
            }
            Some(t.to_vec())
        }
        None => None,
    };

    let (n_s, n_t) = (source.num_samples(), target.num_samples());
    let mut x = DenseMatrix::zeros(source.num_features(), n_s + n_t);
    x.columns_mut(0, n_s).copy_from(source.features());
    x.columns_mut(n_s, n_t).copy_from(target.features());

    let mut warnings = Vec::new();
    let (data, kernel_mode, kernel_gamma) = match kernel_matrix(&x, cfg.kernel) {
        None => (x, false, None),
        Some((k, gamma)) => {
            let eigs = k.clone().symmetric_eigenvalues();
            let scale = eigs.amax();
            let min = eigs.min();
            if min < -1e-8 * scale {
                warnings.push(format!(
                    "kernel matrix is not positive semidefinite (min eigenvalue {min:e})"
                ));
            }
            (k, true, gamma)
        }
    };

    let max_k = data.nrows().min(data.ncols());
    let mut k = cfg.k;
    if k > max_k {
        warnings.push(format!("k = {} clamped to {max_k}", cfg.k));
        k = max_k;
    }
    if k < classes {
        return Err(SolverError::SubspaceTooSmall { k, classes });
    }
    Ok(Problem {
        data,
        n_source: n_s,
        classes,
        source_labels,
        target_truth,
        kernel_mode,
        kernel_gamma,
        k,
        warnings,
    })
}

/// Runs the configured variant. With `cfg.kernel` other than
/// [`KernelChoice::None`] this is the kernelized fit.
pub fn fit(source: &Dataset, target: &Dataset, cfg: &SolverConfig) -> Result<FittedModel, SolverError> {
    fit_observed(source, target, cfg, |_| {})
}

/// Kernelized fit: every occurrence of `X` is replaced by the `n × n` kernel
/// matrix over all samples, so the projection is `n × k`.
pub fn fit_kernel(source: &Dataset, target: &Dataset, cfg: &SolverConfig) -> Result<FittedModel, SolverError> {
    if cfg.kernel == KernelChoice::None {
        return Err(SolverError::InvalidConfig("kernel fit requires a kernel".into()));
    }
    fit(source, target, cfg)
}

/// [`fit`] with a callback invoked after every outer iteration.
pub fn fit_observed(
    source: &Dataset,
    target: &Dataset,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<FittedModel, SolverError> {
    let problem = prepare(source, target, cfg)?;
    match cfg.variant {
        Variant::Full => run_regression(problem, cfg, MstarPolicy::Adaptive, &mut observer),
        Variant::Lcr => run_regression(problem, cfg, MstarPolicy::Zero, &mut observer),
        Variant::Dda => run_alignment(problem, cfg, &mut observer),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum MstarPolicy {
    /// Rebuild `M0 + ΣM_c − M_rep` from the current pseudo-labels.
    Adaptive,
    /// Keep `M* = 0` throughout (label regression only).
    Zero,
}

pub(super) fn run_regression(
    problem: Problem,
    cfg: &SolverConfig,
    policy: MstarPolicy,
    observer: &mut dyn FnMut(&IterationState<'_>),
) -> Result<FittedModel, SolverError> {
    let n = problem.n();
    let n_s = problem.n_source;
    let data = &problem.data;
    let zero = || DenseMatrix::zeros(n, n);

    let init_m = match policy {
        MstarPolicy::Adaptive => build_marginal(n_s, problem.n_target()),
        MstarPolicy::Zero => zero(),
    };
    let mut projection = init_projection(data, &init_m, cfg.alpha, problem.k, cfg.ridge)?;
    let mut pseudo = problem.nearest_neighbour_labels(&(projection.transpose() * data))?;
    let initial: Vec<usize> = problem.source_labels.iter().chain(&pseudo).copied().collect();
    let mut labels = encode_labels(&initial, problem.classes, problem.k)?;
    let mut offset = DVector::zeros(problem.k);
    let mut history = Vec::with_capacity(cfg.outer_iters);

    for iteration in 1..=cfg.outer_iters {
        let mstar = match policy {
            MstarPolicy::Adaptive => build_weights(&problem.source_labels, &pseudo, problem.classes).mstar,
            MstarPolicy::Zero => zero(),
        };
        let update = update_projection(data, labels.values(), &mstar, cfg)?;
        projection = update.projection;
        offset = update_offset(data, &projection, labels.values())?;
        labels = update_labels(data, &projection, &offset, &labels, n_s)?;
        pseudo = labels.hard_labels(n_s..n);

        let value = objective(
            data,
            &projection,
            &offset,
            labels.values(),
            &mstar,
            cfg.alpha,
            cfg.beta,
            cfg.epsilon,
        )?;
        let record = IterationRecord {
            iteration,
            objective: value,
            target_accuracy: problem.accuracy(&pseudo)?,
            inner_objectives: update.inner_objectives,
        };
        observer(&IterationState {
            iteration,
            label_matrix: &labels,
            pseudo_labels: &pseudo,
            projection: &projection,
            mstar: &mstar,
            record: &record,
        });
        history.push(record);
    }

    let embedded = projection.transpose() * data;
    Ok(FittedModel {
        projection: ProjectionModel {
            projection,
            offset,
            kernel_mode: problem.kernel_mode,
        },
        label_matrix: labels,
        target_predictions: pseudo,
        embedded,
        history,
        classes: problem.classes,
        n_source: n_s,
        kernel_gamma: problem.kernel_gamma,
        warnings: problem.warnings,
    })
}

fn run_alignment(
    problem: Problem,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationState<'_>),
) -> Result<FittedModel, SolverError> {
    let n = problem.n();
    let n_s = problem.n_source;
    let data = &problem.data;

    let mut mstar = build_marginal(n_s, problem.n_target());
    let mut history = Vec::with_capacity(cfg.outer_iters);
    let mut projection = DenseMatrix::zeros(data.nrows(), problem.k);
    let mut pseudo = Vec::new();
    let mut labels = None;

    for iteration in 1..=cfg.outer_iters {
        let (s, b) = projection_pencil(data, &mstar, cfg.alpha);
        let ridge = problem.ridge(cfg, &b);
        projection = sym_geig_smallest(&s, &b, problem.k, ridge)?.vectors;
        let embedded = projection.transpose() * data;
        pseudo = problem.nearest_neighbour_labels(&embedded)?;

        let alignment = (&embedded * &mstar).component_mul(&embedded).sum();
        let value = alignment + cfg.alpha * projection.norm_squared();
        let all: Vec<usize> = problem.source_labels.iter().chain(&pseudo).copied().collect();
        let current = encode_labels(&all, problem.classes, problem.k)?;
        let record = IterationRecord {
            iteration,
            objective: value,
            target_accuracy: problem.accuracy(&pseudo)?,
            inner_objectives: Vec::new(),
        };
        observer(&IterationState {
            iteration,
            label_matrix: &current,
            pseudo_labels: &pseudo,
            projection: &projection,
            mstar: &mstar,
            record: &record,
        });
        history.push(record);
        labels = Some(current);
        mstar = build_weights(&problem.source_labels, &pseudo, problem.classes).mstar;
    }

    let labels = labels.expect("at least one outer iteration");
    let offset = update_offset(data, &projection, labels.values())?;
    let embedded = projection.transpose() * data;
    debug_assert_eq!(embedded.ncols(), n);
    Ok(FittedModel {
        projection: ProjectionModel {
            projection,
            offset,
            kernel_mode: problem.kernel_mode,
        },
        label_matrix: labels,
        target_predictions: pseudo,
        embedded,
        history,
        classes: problem.classes,
        n_source: n_s,
        kernel_gamma: problem.kernel_gamma,
        warnings: problem.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DomainTag, PortableRng};
    use crate::solver::steps::update_projection;

    fn blobs(seed: u64, per_class: usize, classes: usize, dim: usize, shift: f64) -> (Dataset, Dataset) {
        let mut rng = PortableRng::new(seed);
        let centres: Vec<Vec<f64>> = (0..classes)
            .map(|_| (0..dim).map(|_| 4.0 * rng.gaussian()).collect())
            .collect();
        let mut draw = |offset: f64| {
            let mut cols = Vec::new();
            let mut labels = Vec::new();
            for (c, centre) in centres.iter().enumerate() {
                for _ in 0..per_class {
                    cols.extend(centre.iter().map(|v| v + offset + 0.5 * rng.gaussian()));
                    labels.push(c + 1);
                }
            }
            (DenseMatrix::from_column_slice(dim, labels.len(), &cols), labels)
        };
        let (xs, ys) = draw(0.0);
        let (xt, yt) = draw(shift);
        (
            Dataset::new("s", DomainTag::Source, xs, Some(ys)).unwrap(),
            Dataset::new("t", DomainTag::Target, xt, Some(yt)).unwrap(),
        )
    }

    fn small_cfg(variant: Variant) -> SolverConfig {
        SolverConfig {
            k: 4,
            outer_iters: 3,
            variant,
            ..Default::default()
        }
    }

    #[test]
    fn target_copy_of_source_is_fully_recovered() {
        let (source, _) = blobs(0, 10, 3, 5, 0.0);
        let target = source.clone().without_labels().with_labels(source.labels().unwrap().to_vec()).unwrap();
        let model = fit(&source, &target, &small_cfg(Variant::Full)).unwrap();
        assert_eq!(model.final_accuracy(), Some(1.0));
        assert_eq!(model.target_predictions, source.labels().unwrap());
    }

    #[test]
    fn history_and_replay() {
        let (source, target) = blobs(1, 30, 3, 4, 1.0);
        let one = fit(&source, &target, &SolverConfig { outer_iters: 1, ..small_cfg(Variant::Full) }).unwrap();
        let two = fit(&source, &target, &SolverConfig { outer_iters: 2, ..small_cfg(Variant::Full) }).unwrap();
        assert_eq!(one.history.len(), 1);
        assert_eq!(two.history.len(), 2);
        assert_eq!(one.history[0], two.history[0]);
    }

    #[test]
    fn fit_is_deterministic() {
        let (source, target) = blobs(2, 30, 3, 4, 1.0);
        for variant in [Variant::Full, Variant::Dda, Variant::Lcr] {
            let a = fit(&source, &target, &small_cfg(variant)).unwrap();
            let b = fit(&source, &target, &small_cfg(variant)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lcr_matches_loop_without_alignment() {
        let (source, target) = blobs(3, 15, 2, 4, 0.5);
        let cfg = small_cfg(Variant::Lcr);
        let model = fit(&source, &target, &cfg).unwrap();

        // hand-rolled loop that never sees an MMD matrix
        let problem = prepare(&source, &target, &cfg).unwrap();
        let n = problem.n();
        let zero = DenseMatrix::zeros(n, n);
        let a0 = init_projection(&problem.data, &zero, cfg.alpha, problem.k, cfg.ridge).unwrap();
        let pseudo = problem.nearest_neighbour_labels(&(a0.transpose() * &problem.data)).unwrap();
        let all: Vec<usize> = problem.source_labels.iter().chain(&pseudo).copied().collect();
        let mut y = encode_labels(&all, problem.classes, problem.k).unwrap();
        let mut a = a0;
        for _ in 0..cfg.outer_iters {
            a = update_projection(&problem.data, y.values(), &zero, &cfg).unwrap().projection;
            let e = update_offset(&problem.data, &a, y.values()).unwrap();
            y = update_labels(&problem.data, &a, &e, &y, problem.n_source).unwrap();
        }
        assert_eq!(model.projection.projection, a);
        assert_eq!(model.label_matrix, y);
    }

    #[test]
    fn dda_single_class_terminates() {
        let (source, target) = blobs(4, 10, 1, 3, 1.0);
        let cfg = SolverConfig { k: 2, ..small_cfg(Variant::Dda) };
        let model = fit(&source, &target, &cfg).unwrap();
        assert!(model.target_predictions.iter().all(|&l| l == 1));
        assert_eq!(model.history.len(), 3);
    }

    #[test]
    fn validation_errors() {
        let (source, target) = blobs(5, 5, 3, 4, 0.0);
        let unlabeled = source.clone().without_labels();
        assert!(matches!(
            fit(&unlabeled, &target, &small_cfg(Variant::Full)),
            Err(SolverError::MissingSourceLabels)
        ));
        let gap = source.clone().with_labels(vec![1; 5].into_iter().chain(vec![3; 10]).collect()).unwrap();
        assert!(matches!(
            fit(&gap, &target, &small_cfg(Variant::Full)),
            Err(SolverError::ClassMissingInSource { class: 2 })
        ));
        let cfg = SolverConfig { k: 2, ..small_cfg(Variant::Full) };
        assert!(matches!(
            fit(&source, &target, &cfg),
            Err(SolverError::SubspaceTooSmall { k: 2, classes: 3 })
        ));
        let (other, _) = blobs(5, 5, 3, 6, 0.0);
        assert!(matches!(
            fit(&source, &other, &small_cfg(Variant::Full)),
            Err(SolverError::FeatureDimMismatch { .. })
        ));
        assert!(fit_kernel(&source, &target, &small_cfg(Variant::Full)).is_err());
    }

    #[test]
    fn k_is_clamped_with_warning() {
        let (source, target) = blobs(6, 15, 2, 3, 0.5);
        let cfg = SolverConfig { k: 50, ..small_cfg(Variant::Full) };
        let model = fit(&source, &target, &cfg).unwrap();
        assert_eq!(model.projection.dim(), 3);
        assert!(model.warnings.iter().any(|w| w.contains("clamped")));
    }

    #[test]
    fn tiny_gamma_rbf_terminates() {
        let (source, target) = blobs(7, 15, 2, 3, 0.5);
        let cfg = SolverConfig {
            kernel: KernelChoice::Rbf { gamma: Some(1e-12) },
            ..small_cfg(Variant::Full)
        };
        let model = fit_kernel(&source, &target, &cfg).unwrap();
        assert_eq!(model.target_predictions.len(), 30);
        assert!(model.target_predictions.iter().all(|&l| (1..=2).contains(&l)));
    }
}
