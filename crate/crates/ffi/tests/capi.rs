//! Exercises the C surface exactly as a foreign caller would: raw pointers,
//! status codes, and the generated header.

use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use per_ffi::{
    per_collection_free, per_collection_len, per_collection_load, per_emitter_free,
    per_emitter_new, per_emitter_next, per_last_error_message, per_params_default, PerCollection,
    PerComparison, PerEmitter, PerFormat, PerMethod, PerStatus,
};

fn write_fixture(dir: &Path) -> CString {
    let path = dir.join("fixture.csv");
    std::fs::write(&path, "name\njohn smith\njohn smith\nmary jones\nmary smith\n").unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

fn load(path: &CString) -> *mut PerCollection {
    let mut handle: *mut PerCollection = ptr::null_mut();
    let status = unsafe {
        per_collection_load(path.as_ptr(), ptr::null(), PerFormat::Csv, ptr::null(), &mut handle)
    };
    assert_eq!(status, PerStatus::Ok);
    assert!(!handle.is_null());
    handle
}

fn drain(emitter: *mut PerEmitter) -> Vec<(u32, u32, f64)> {
    let mut out = Vec::new();
    loop {
        let mut comparison = PerComparison { i: 0, j: 0, weight: 0.0 };
        match unsafe { per_emitter_next(emitter, &mut comparison) } {
            PerStatus::Ok => out.push((comparison.i, comparison.j, comparison.weight)),
            PerStatus::Exhausted => break,
            other => panic!("unexpected status {other:?}"),
        }
    }
    out
}

#[test]
fn load_and_drain_pbs_through_the_c_surface() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_fixture(dir.path());
    let collection = load(&path);
    assert_eq!(unsafe { per_collection_len(collection) }, 4);

    let mut emitter: *mut PerEmitter = ptr::null_mut();
    let status =
        unsafe { per_emitter_new(collection, PerMethod::Pbs, ptr::null(), &mut emitter) };
    assert_eq!(status, PerStatus::Ok);
    // The collection is no longer needed once the emitter exists.
    unsafe { per_collection_free(collection) };

    let emitted = drain(emitter);
    let pairs: Vec<(u32, u32)> = emitted.iter().map(|&(i, j, _)| (i, j)).collect();
    assert_eq!(pairs, vec![(0, 1), (2, 3), (0, 3), (1, 3)]);
    assert!((emitted[0].2 - 4.0 / 3.0).abs() < 1e-12);

    // Exhaustion is terminal.
    let mut comparison = PerComparison { i: 0, j: 0, weight: 0.0 };
    assert_eq!(unsafe { per_emitter_next(emitter, &mut comparison) }, PerStatus::Exhausted);
    unsafe { per_emitter_free(emitter) };
}

#[test]
fn every_method_agrees_with_the_core_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_fixture(dir.path());
    let collection = load(&path);

    let core_collection = {
        use per_core::ingest::{load_profiles, DataFormat, DatasetSpec};
        let spec = DatasetSpec::dirty(path.to_str().unwrap(), DataFormat::Csv);
        load_profiles(&spec).unwrap().0
    };

    for (ffi_method, core_method) in [
        (PerMethod::SaPsn, per_core::Method::SaPsn),
        (PerMethod::SaPsab, per_core::Method::SaPsab),
        (PerMethod::LsPsn, per_core::Method::LsPsn),
        (PerMethod::GsPsn, per_core::Method::GsPsn),
        (PerMethod::Pbs, per_core::Method::Pbs),
        (PerMethod::Pps, per_core::Method::Pps),
    ] {
        let mut emitter: *mut PerEmitter = ptr::null_mut();
        let params = per_params_default();
        let status = unsafe { per_emitter_new(collection, ffi_method, &params, &mut emitter) };
        assert_eq!(status, PerStatus::Ok);
        let via_ffi = drain(emitter);
        unsafe { per_emitter_free(emitter) };

        let core_params = per_core::MethodParams {
            ls_window_cap: Some(per_core::MethodParams::default().w_max),
            ..Default::default()
        };
        let mut core_emitter =
            per_core::build_emitter(core_method, &core_collection, &core_params).unwrap();
        let direct: Vec<(u32, u32, f64)> =
            std::iter::from_fn(|| core_emitter.next_comparison())
                .map(|c| (c.i, c.j, c.weight))
                .collect();
        assert_eq!(via_ffi, direct, "{core_method} diverges across the boundary");
    }
    unsafe { per_collection_free(collection) };
}

#[test]
fn null_arguments_and_errors_report_status() {
    let mut handle: *mut PerCollection = ptr::null_mut();
    let status = unsafe {
        per_collection_load(ptr::null(), ptr::null(), PerFormat::Csv, ptr::null(), &mut handle)
    };
    assert_eq!(status, PerStatus::NullArgument);

    let missing = CString::new("/nonexistent/profiles.csv").unwrap();
    let status = unsafe {
        per_collection_load(missing.as_ptr(), ptr::null(), PerFormat::Csv, ptr::null(), &mut handle)
    };
    assert_eq!(status, PerStatus::IoError);
    let message = unsafe { CStr::from_ptr(per_last_error_message()) };
    assert!(!message.to_bytes().is_empty());

    // Profiles sharing no token yield no blocks for the equality methods.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(&path, "name\nalpha\nbeta\n").unwrap();
    let path = CString::new(path.to_str().unwrap()).unwrap();
    let collection = load(&path);
    let mut emitter: *mut PerEmitter = ptr::null_mut();
    let status =
        unsafe { per_emitter_new(collection, PerMethod::Pbs, ptr::null(), &mut emitter) };
    assert_eq!(status, PerStatus::EmptyBlocks);
    unsafe { per_collection_free(collection) };

    // Frees tolerate null.
    unsafe {
        per_collection_free(ptr::null_mut());
        per_emitter_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_declares_the_surface() {
    let header_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/per_ffi.h");
    let header = std::fs::read_to_string(&header_path).expect("header generated by build.rs");
    for symbol in [
        "per_collection_load",
        "per_collection_len",
        "per_collection_free",
        "per_emitter_new",
        "per_emitter_next",
        "per_emitter_free",
        "per_params_default",
        "per_last_error_message",
        "typedef struct PerCollection PerCollection;",
        "typedef struct PerEmitter PerEmitter;",
    ] {
        assert!(header.contains(symbol), "header missing: {symbol}");
    }
}
