use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dlcda_ffi::*;

// Two well-separated classes in 3-D; the target is a slightly shifted copy.
fn blobs(shift: f64) -> (Vec<f64>, Vec<u32>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let class = 1 + (i % 2) as u32;
        let centre = if class == 1 { -2.0 } else { 2.0 };
        let jitter = ((i * 37 % 11) as f64 - 5.0) * 0.05;
        x.extend_from_slice(&[centre + jitter + shift, jitter - shift, 0.5 * jitter]);
        y.push(class);
    }
    (x, y)
}

fn dataset(x: &[f64], y: Option<&[u32]>) -> *mut DlcdaDataset {
    let mut out = ptr::null_mut();
    let labels = y.map_or(ptr::null(), |l| l.as_ptr());
    let status = unsafe { dlcda_dataset_new(x.as_ptr(), 3, x.len() / 3, labels, &mut out) };
    assert_eq!(status, DlcdaStatus::Ok);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dlcda_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn fit_and_read_back() {
    let (xs, ys) = blobs(0.0);
    let (xt, yt) = blobs(0.3);
    let source = dataset(&xs, Some(&ys));
    let target = dataset(&xt, Some(&yt));
    let mut cfg = dlcda_solver_config_default();
    cfg.k = 2;
    cfg.outer_iters = 3;

    let mut model = ptr::null_mut();
    let status = unsafe { dlcda_fit(source, target, &cfg, &mut model) };
    assert_eq!(status, DlcdaStatus::Ok, "{}", last_error());

    let n_t = unsafe { dlcda_model_target_count(model) };
    assert_eq!(n_t, 40);
    let mut predictions = vec![0u32; n_t];
    assert_eq!(
        unsafe { dlcda_model_predictions(model, predictions.as_mut_ptr(), n_t) },
        DlcdaStatus::Ok
    );
    assert_eq!(predictions, yt);

    let mut acc = 0.0;
    assert_eq!(unsafe { dlcda_model_final_accuracy(model, &mut acc) }, DlcdaStatus::Ok);
    assert_eq!(acc, 1.0);

    let t = unsafe { dlcda_model_iterations(model) };
    assert_eq!(t, 3);
    let mut objective = vec![0.0; t];
    let mut accuracy = vec![0.0; t];
    assert_eq!(
        unsafe { dlcda_model_history(model, objective.as_mut_ptr(), accuracy.as_mut_ptr(), t) },
        DlcdaStatus::Ok
    );
    assert!(objective.iter().all(|v| v.is_finite()));

    let k = unsafe { dlcda_model_dim(model) };
    let mut z = vec![0.0; k * 80];
    assert_eq!(
        unsafe { dlcda_model_embedding(model, z.as_mut_ptr(), z.len()) },
        DlcdaStatus::Ok
    );
    assert_eq!(
        unsafe { dlcda_model_embedding(model, z.as_mut_ptr(), z.len() - 1) },
        DlcdaStatus::BufferTooSmall
    );

    unsafe {
        dlcda_model_free(model);
        dlcda_dataset_free(source);
        dlcda_dataset_free(target);
    }
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    let status = unsafe { dlcda_dataset_new(ptr::null(), 3, 2, ptr::null(), &mut out) };
    assert_eq!(status, DlcdaStatus::NullPointer);
    assert!(!last_error().is_empty());

    let x = [0.0, 1.0, f64::NAN];
    let status = unsafe { dlcda_dataset_new(x.as_ptr(), 3, 1, ptr::null(), &mut out) };
    assert_eq!(status, DlcdaStatus::DataError);
    assert!(last_error().contains("non-finite"));

    // unlabeled source
    let (xs, _) = blobs(0.0);
    let source = dataset(&xs, None);
    let target = dataset(&xs, None);
    let mut cfg = dlcda_solver_config_default();
    cfg.k = 2;
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { dlcda_fit(source, target, &cfg, &mut model) },
        DlcdaStatus::SolverError
    );
    assert!(model.is_null());

    cfg.k = 0;
    assert_eq!(
        unsafe { dlcda_fit(source, target, &cfg, &mut model) },
        DlcdaStatus::InvalidArgument
    );

    unsafe {
        dlcda_dataset_free(source);
        dlcda_dataset_free(target);
        dlcda_dataset_free(ptr::null_mut());
        dlcda_model_free(ptr::null_mut());
    }
}

#[test]
fn accuracy_without_truth_is_no_value() {
    let (xs, ys) = blobs(0.0);
    let source = dataset(&xs, Some(&ys));
    let target = dataset(&xs, None);
    let mut cfg = dlcda_solver_config_default();
    cfg.k = 2;
    cfg.outer_iters = 1;
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { dlcda_fit(source, target, &cfg, &mut model) }, DlcdaStatus::Ok);
    let mut acc = 0.0;
    assert_eq!(unsafe { dlcda_model_final_accuracy(model, &mut acc) }, DlcdaStatus::NoValue);
    unsafe {
        dlcda_model_free(model);
        dlcda_dataset_free(source);
        dlcda_dataset_free(target);
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(dlcda_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dlcda.h")).unwrap();
    for name in [
        "dlcda_dataset_new",
        "dlcda_dataset_free",
        "dlcda_fit",
        "dlcda_model_free",
        "dlcda_model_predictions",
        "dlcda_model_final_accuracy",
        "dlcda_model_history",
        "dlcda_model_embedding",
        "dlcda_last_error_message",
        "typedef struct DlcdaModel DlcdaModel;",
        "DLCDA_STATUS_SOLVER_ERROR = 4",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

// Compiles and runs a C program against the generated header and the static
// library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libdlcda_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let src = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/smoke.c"));
    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let bin = out_dir.join("dlcda_smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let output = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "smoke program failed: {stdout}");
    assert!(stdout.contains("accuracy=1.0000"), "{stdout}");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
