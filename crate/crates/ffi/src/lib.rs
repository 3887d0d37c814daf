//! C ABI over the `dlcda` solver.
//!
//! Datasets and fitted models are opaque heap handles created and released by
//! this library. Every fallible call returns a [`DlcdaStatus`]; on failure a
//! description is available from [`dlcda_last_error_message`] on the same
//! thread. Feature buffers are sample-major: the `n_features` values of each
//! sample are contiguous.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dlcda::data::{Dataset, DomainTag};
use dlcda::solver::{fit, FittedModel, KernelChoice, SolverConfig, SolverError, Variant};
use dlcda::DenseMatrix;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcdaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    SolverError = 4,
    /// The requested value does not exist (e.g. accuracy without ground truth).
    NoValue = 5,
    /// The output buffer is shorter than required.
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcdaVariant {
    Full = 0,
    Dda = 1,
    Lcr = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcdaKernel {
    None = 0,
    Linear = 1,
    Rbf = 2,
}

/// Solver settings. Obtain defaults from [`dlcda_solver_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlcdaSolverConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub epsilon: f64,
    pub tol: f64,
    pub variant: DlcdaVariant,
    pub kernel: DlcdaKernel,
    /// RBF bandwidth; any value `<= 0` selects the median heuristic.
    pub gamma: f64,
    /// Eigen pencil ridge; any value `< 0` selects the default.
    pub ridge: f64,
}

impl From<&DlcdaSolverConfig> for SolverConfig {
    fn from(c: &DlcdaSolverConfig) -> Self {
        SolverConfig {
            k: c.k,
            alpha: c.alpha,
            beta: c.beta,
            outer_iters: c.outer_iters,
            inner_iters: c.inner_iters,
            epsilon: c.epsilon,
            tol: c.tol,
            variant: match c.variant {
                DlcdaVariant::Full => Variant::Full,
                DlcdaVariant::Dda => Variant::Dda,
                DlcdaVariant::Lcr => Variant::Lcr,
            },
            kernel: match c.kernel {
                DlcdaKernel::None => KernelChoice::None,
                DlcdaKernel::Linear => KernelChoice::Linear,
                DlcdaKernel::Rbf => KernelChoice::Rbf {
                    gamma: (c.gamma > 0.0).then_some(c.gamma),
                },
            },
            ridge: (c.ridge >= 0.0).then_some(c.ridge),
        }
    }
}

/// Opaque dataset handle.
pub struct DlcdaDataset(Dataset);

/// Opaque fitted-model handle.
pub struct DlcdaModel(FittedModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: DlcdaStatus, message: impl Into<String>) -> DlcdaStatus {
    set_error(message);
    status
}

fn guarded(f: impl FnOnce() -> DlcdaStatus) -> DlcdaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == DlcdaStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(DlcdaStatus::Panic, "internal panic"),
    }
}

/// Message describing the most recent failure on this thread, or an empty
/// string. The pointer stays valid until the next call into this library on
/// the same thread.
#[no_mangle]
pub extern "C" fn dlcda_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dlcda_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn dlcda_solver_config_default() -> DlcdaSolverConfig {
    let d = SolverConfig::default();
    DlcdaSolverConfig {
        k: d.k,
        alpha: d.alpha,
        beta: d.beta,
        outer_iters: d.outer_iters,
        inner_iters: d.inner_iters,
        epsilon: d.epsilon,
        tol: d.tol,
        variant: DlcdaVariant::Full,
        kernel: DlcdaKernel::None,
        gamma: 0.0,
        ridge: -1.0,
    }
}

/// Copies `n_samples × n_features` sample-major values (and optionally
/// `n_samples` labels in `1..=C`) into a new dataset.
///
/// # Safety
/// `features` must point to `n_features * n_samples` readable doubles;
/// `labels`, when non-null, to `n_samples` readable `uint32_t`; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dlcda_dataset_new(
    features: *const f64,
    n_features: usize,
    n_samples: usize,
    labels: *const u32,
    out: *mut *mut DlcdaDataset,
) -> DlcdaStatus {
    guarded(|| {
        if features.is_null() || out.is_null() {
            return fail(DlcdaStatus::NullPointer, "features and out must be non-null");
        }
        if n_features == 0 || n_samples == 0 {
            return fail(DlcdaStatus::InvalidArgument, "dataset dimensions must be positive");
        }
        let Some(len) = n_features.checked_mul(n_samples) else {
            return fail(DlcdaStatus::InvalidArgument, "dataset size overflows");
        };
        // SAFETY: caller guarantees `len` readable values.
        let values = unsafe { std::slice::from_raw_parts(features, len) };
        let x = DenseMatrix::from_column_slice(n_features, n_samples, values);
        let labels = (!labels.is_null()).then(|| {
            // SAFETY: caller guarantees `n_samples` readable labels.
            unsafe { std::slice::from_raw_parts(labels, n_samples) }
                .iter()
                .map(|&l| l as usize)
                .collect::<Vec<_>>()
        });
        match Dataset::new("ffi", DomainTag::Source, x, labels) {
            Ok(d) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(DlcdaDataset(d))) };
                DlcdaStatus::Ok
            }
            Err(e) => fail(DlcdaStatus::DataError, e.to_string()),
        }
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `dataset` must come from [`dlcda_dataset_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dlcda_dataset_free(dataset: *mut DlcdaDataset) {
    if !dataset.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(dataset) });
    }
}

/// Fits a model. The target's labels, if any, are used for accuracy only.
///
/// # Safety
/// All pointers must be valid; `source` and `target` must be live datasets.
#[no_mangle]
pub unsafe extern "C" fn dlcda_fit(
    source: *const DlcdaDataset,
    target: *const DlcdaDataset,
    config: *const DlcdaSolverConfig,
    out: *mut *mut DlcdaModel,
) -> DlcdaStatus {
    guarded(|| {
        if source.is_null() || target.is_null() || config.is_null() || out.is_null() {
            return fail(DlcdaStatus::NullPointer, "source, target, config and out must be non-null");
        }
        // SAFETY: checked non-null; validity is the caller's contract.
        let (source, target, config) = unsafe { (&(*source).0, &(*target).0, &*config) };
        let target = target.clone().with_domain(DomainTag::Target);
        match fit(source, &target, &SolverConfig::from(config)) {
            Ok(model) => {
                // SAFETY: `out` checked non-null.
                unsafe { *out = Box::into_raw(Box::new(DlcdaModel(model))) };
                DlcdaStatus::Ok
            }
            Err(e @ SolverError::InvalidConfig(_)) => fail(DlcdaStatus::InvalidArgument, e.to_string()),
            Err(e @ SolverError::Data(_)) => fail(DlcdaStatus::DataError, e.to_string()),
            Err(e) => fail(DlcdaStatus::SolverError, e.to_string()),
        }
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`dlcda_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_free(model: *mut DlcdaModel) {
    if !model.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(model) });
    }
}

unsafe fn model_ref<'a>(model: *const DlcdaModel) -> Option<&'a FittedModel> {
    // SAFETY: forwarded from the caller.
    unsafe { model.as_ref() }.map(|m| &m.0)
}

/// Number of target samples (length of the prediction buffer).
///
/// # Safety
/// `model` must be a live model or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_target_count(model: *const DlcdaModel) -> usize {
    // SAFETY: forwarded.
    unsafe { model_ref(model) }.map_or(0, |m| m.target_predictions.len())
}

/// Number of recorded outer iterations.
///
/// # Safety
/// `model` must be a live model or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_iterations(model: *const DlcdaModel) -> usize {
    // SAFETY: forwarded.
    unsafe { model_ref(model) }.map_or(0, |m| m.history.len())
}

/// Subspace dimension `k` after clamping.
///
/// # Safety
/// `model` must be a live model or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_dim(model: *const DlcdaModel) -> usize {
    // SAFETY: forwarded.
    unsafe { model_ref(model) }.map_or(0, |m| m.projection.dim())
}

/// Writes the target predictions (labels in `1..=C`).
///
/// # Safety
/// `out` must point to `len` writable `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_predictions(model: *const DlcdaModel, out: *mut u32, len: usize) -> DlcdaStatus {
    guarded(|| {
        // SAFETY: forwarded.
        let Some(m) = (unsafe { model_ref(model) }) else {
            return fail(DlcdaStatus::NullPointer, "model must be non-null");
        };
        if out.is_null() {
            return fail(DlcdaStatus::NullPointer, "out must be non-null");
        }
        let p = &m.target_predictions;
        if len < p.len() {
            return fail(DlcdaStatus::BufferTooSmall, format!("need {} entries, got {len}", p.len()));
        }
        // SAFETY: `len >= p.len()` writable slots.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, p.len()) };
        for (d, &s) in dst.iter_mut().zip(p) {
            *d = s as u32;
        }
        DlcdaStatus::Ok
    })
}

/// Final target accuracy; [`DlcdaStatus::NoValue`] when the target had no
/// labels.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_final_accuracy(model: *const DlcdaModel, out: *mut f64) -> DlcdaStatus {
    guarded(|| {
        // SAFETY: forwarded.
        let Some(m) = (unsafe { model_ref(model) }) else {
            return fail(DlcdaStatus::NullPointer, "model must be non-null");
        };
        if out.is_null() {
            return fail(DlcdaStatus::NullPointer, "out must be non-null");
        }
        match m.final_accuracy() {
            Some(a) => {
                // SAFETY: checked non-null.
                unsafe { *out = a };
                DlcdaStatus::Ok
            }
            None => fail(DlcdaStatus::NoValue, "target has no ground-truth labels"),
        }
    })
}

/// Writes the per-iteration objective values and, when `accuracy` is
/// non-null, target accuracies (NaN where unknown). Both buffers need
/// [`dlcda_model_iterations`] entries.
///
/// # Safety
/// Non-null buffers must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_history(
    model: *const DlcdaModel,
    objective: *mut f64,
    accuracy: *mut f64,
    len: usize,
) -> DlcdaStatus {
    guarded(|| {
        // SAFETY: forwarded.
        let Some(m) = (unsafe { model_ref(model) }) else {
            return fail(DlcdaStatus::NullPointer, "model must be non-null");
        };
        if objective.is_null() {
            return fail(DlcdaStatus::NullPointer, "objective must be non-null");
        }
        let t = m.history.len();
        if len < t {
            return fail(DlcdaStatus::BufferTooSmall, format!("need {t} entries, got {len}"));
        }
        for (i, r) in m.history.iter().enumerate() {
            // SAFETY: `i < t <= len`.
            unsafe {
                *objective.add(i) = r.objective;
                if !accuracy.is_null() {
                    *accuracy.add(i) = r.target_accuracy.unwrap_or(f64::NAN);
                }
            }
        }
        DlcdaStatus::Ok
    })
}

/// Writes the embedding `Z` (`k` values per sample, source samples first)
/// sample-major; needs `k * (n_source + n_target)` entries.
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dlcda_model_embedding(model: *const DlcdaModel, out: *mut f64, len: usize) -> DlcdaStatus {
    guarded(|| {
        // SAFETY: forwarded.
        let Some(m) = (unsafe { model_ref(model) }) else {
            return fail(DlcdaStatus::NullPointer, "model must be non-null");
        };
        if out.is_null() {
            return fail(DlcdaStatus::NullPointer, "out must be non-null");
        }
        let z = m.embedded.as_slice();
        if len < z.len() {
            return fail(DlcdaStatus::BufferTooSmall, format!("need {} entries, got {len}", z.len()));
        }
        // SAFETY: `len >= z.len()` writable slots, no overlap with model memory.
        unsafe { ptr::copy_nonoverlapping(z.as_ptr(), out, z.len()) };
        DlcdaStatus::Ok
    })
}
