use std::ffi::{CStr, CString};
use std::ptr;

use shapreg_ffi::*;

fn last_error() -> String {
    let p = shapreg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn toy() -> (Vec<f64>, Vec<u8>) {
    // 40 rows, 3 features; label is x0 > 0.5
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let a = (i as f64 * 0.37).fract();
        let b = (i as f64 * 0.61).fract();
        let c = (i as f64 * 0.23).fract();
        x.extend([a, b, c]);
        y.push(u8::from(a > 0.5));
    }
    (x, y)
}

#[test]
fn fit_predict_save_load_round_trip() {
    let (x, y) = toy();
    let mut model = ptr::null_mut();
    let st = unsafe {
        shapreg_fit(
            x.as_ptr(),
            y.as_ptr(),
            40,
            3,
            2,
            ShapregPenalty::L2,
            0.1,
            7,
            &mut model,
        )
    };
    assert_eq!(st, ShapregStatus::Ok);
    assert!(shapreg_last_error_message().is_null());

    let (mut n, mut k, mut bias) = (0usize, 0usize, 0.0f64);
    assert_eq!(
        unsafe { shapreg_model_info(model, &mut n, &mut k, &mut bias) },
        ShapregStatus::Ok
    );
    assert_eq!((n, k), (3, 2));

    let mut dim = 0u64;
    assert_eq!(
        unsafe { shapreg_dimension(3, 2, &mut dim) },
        ShapregStatus::Ok
    );
    assert_eq!(dim, 6);
    let mut idx = vec![0.0; 6];
    assert_eq!(
        unsafe { shapreg_model_indices(model, idx.as_mut_ptr(), 6) },
        ShapregStatus::Ok
    );
    // x0 drives the label
    assert!(idx[0].abs() > idx[1].abs() && idx[0].abs() > idx[2].abs());
    assert_eq!(
        unsafe { shapreg_model_indices(model, idx.as_mut_ptr(), 7) },
        ShapregStatus::InvalidArgument
    );

    let mut p = vec![0.0; 40];
    assert_eq!(
        unsafe { shapreg_model_predict_proba(model, x.as_ptr(), 40, 3, p.as_mut_ptr()) },
        ShapregStatus::Ok
    );
    let hits = p
        .iter()
        .zip(&y)
        .filter(|(p, y)| u8::from(**p >= 0.5) == **y)
        .count();
    assert!(hits >= 36, "training accuracy {hits}/40");

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { shapreg_model_save(model, path.as_ptr()) },
        ShapregStatus::Ok
    );
    let mut loaded = ptr::null_mut();
    assert_eq!(
        unsafe { shapreg_model_load(path.as_ptr(), &mut loaded) },
        ShapregStatus::Ok
    );
    let mut q = vec![0.0; 40];
    unsafe { shapreg_model_predict_proba(loaded, x.as_ptr(), 40, 3, q.as_mut_ptr()) };
    assert_eq!(p, q);

    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    unsafe {
        shapreg_model_to_json(model, &mut a);
        shapreg_model_to_json(loaded, &mut b);
        assert_eq!(CStr::from_ptr(a), CStr::from_ptr(b));
        shapreg_string_free(a);
        shapreg_string_free(b);
        shapreg_model_free(model);
        shapreg_model_free(loaded);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut model = ptr::null_mut();
    let path = CString::new("/no/such/model.json").unwrap();
    assert_eq!(
        unsafe { shapreg_model_load(path.as_ptr(), &mut model) },
        ShapregStatus::Io
    );
    assert!(last_error().contains("/no/such/model.json"));
    assert!(model.is_null());

    assert_eq!(
        unsafe { shapreg_model_load(ptr::null(), &mut model) },
        ShapregStatus::InvalidArgument
    );
    assert!(last_error().contains("null"));

    let mut dim = 0u64;
    assert_eq!(
        unsafe { shapreg_dimension(3, 4, &mut dim) },
        ShapregStatus::InvalidArgument
    );

    let (x, y) = toy();
    let st = unsafe {
        shapreg_fit(
            x.as_ptr(),
            y.as_ptr(),
            40,
            3,
            1,
            ShapregPenalty::L2,
            -1.0,
            0,
            &mut model,
        )
    };
    assert_eq!(st, ShapregStatus::InvalidArgument);

    // success clears the message
    assert_eq!(
        unsafe { shapreg_dimension(3, 2, &mut dim) },
        ShapregStatus::Ok
    );
    assert!(shapreg_last_error_message().is_null());
}

#[test]
fn predict_rejects_wrong_width() {
    let (x, y) = toy();
    let mut model = ptr::null_mut();
    unsafe {
        shapreg_fit(
            x.as_ptr(),
            y.as_ptr(),
            40,
            3,
            1,
            ShapregPenalty::L2,
            1.0,
            0,
            &mut model,
        )
    };
    let mut out = vec![0.0; 30];
    let st = unsafe { shapreg_model_predict_proba(model, x.as_ptr(), 30, 4, out.as_mut_ptr()) };
    assert_eq!(st, ShapregStatus::DataError);
    assert!(last_error().contains("expected 3"));
    unsafe { shapreg_model_free(model) };
}

#[test]
fn transforms_round_trip() {
    // capacity on 3 players ({0},{1},{2},{0,1},{0,2},{1,2},{0,1,2}) -> Shapley -> capacity
    let capacity = [0.1, 0.2, 0.3, 0.35, 0.5, 0.45, 1.0];
    let mut shapley = [0.0; 7];
    let mut back = [0.0; 7];
    unsafe {
        assert_eq!(
            shapreg_transform(
                3,
                3,
                ShapregBasis::Capacity,
                ShapregBasis::Shapley,
                capacity.as_ptr(),
                shapley.as_mut_ptr(),
                7
            ),
            ShapregStatus::Ok
        );
        assert_eq!(
            shapreg_transform(
                3,
                3,
                ShapregBasis::Shapley,
                ShapregBasis::Capacity,
                shapley.as_ptr(),
                back.as_mut_ptr(),
                7
            ),
            ShapregStatus::Ok
        );
    }
    // efficiency: singleton Shapley values sum to v(N)
    assert!((shapley[0] + shapley[1] + shapley[2] - 1.0).abs() < 1e-12);
    for (a, b) in capacity.iter().zip(&back) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn header_is_current_and_compiles() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shapreg.h")).unwrap();
    for name in [
        "shapreg_fit",
        "shapreg_model_load",
        "shapreg_model_predict_proba",
        "shapreg_transform",
        "shapreg_last_error_message",
        "typedef struct ShapregModel ShapregModel;",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shapreg.h"))
        .status()
    else {
        return; // no C compiler available
    };
    assert!(status.success());
}
