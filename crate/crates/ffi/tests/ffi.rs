use std::ffi::{CStr, CString};
use std::ptr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wdan::backbone::BackboneKind;
use wdan::norm::{compute_stats, normalize, NormConfig};
use wdan::pipeline::{ModelBundle, Pipeline, Variant};
use wdan::predictor::PredictorConfig;
use wdan_ffi::*;

fn signal(seed: u64, n: usize) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut level = 0.0;
    (0..n)
        .map(|t| {
            level += r.gen_range(-0.3..0.3);
            level + (t as f64 * 0.4).sin() + 0.2 * r.gen_range(-1.0..1.0)
        })
        .collect()
}

fn last_error() -> String {
    let p = wdan_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn normalizer(basis: &str, levels: usize, w: usize) -> (WdanStatus, *mut WdanNormalizer) {
    let name = CString::new(basis).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { wdan_normalizer_new(name.as_ptr(), levels, w, 1e-5, false, &mut h) };
    (st, h)
}

#[test]
fn normalizer_matches_the_core_library() {
    let (st, h) = normalizer("coif3", 3, 12);
    assert_eq!(st, WdanStatus::Ok);
    assert!(unsafe { wdan_normalizer_min_len(h) } >= 8);
    let x = signal(1, 96);
    let (mut z, mut m, mut s) = (vec![0.0; 96], vec![0.0; 96], vec![0.0; 96]);
    let st = unsafe { wdan_normalizer_normalize(h, x.as_ptr(), 96, z.as_mut_ptr(), m.as_mut_ptr(), s.as_mut_ptr()) };
    assert_eq!(st, WdanStatus::Ok);
    let cfg = NormConfig {
        levels: 3,
        window_half_width: 12,
        ..NormConfig::default()
    };
    let stats = compute_stats(&x, &cfg).unwrap();
    assert_eq!(m, stats.mean);
    assert_eq!(s, stats.std);
    assert_eq!(z, normalize(&x, &stats, 1e-5).unwrap());

    // optional outputs may be omitted
    let mut z2 = vec![0.0; 96];
    let st = unsafe { wdan_normalizer_normalize(h, x.as_ptr(), 96, z2.as_mut_ptr(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(st, WdanStatus::Ok);
    assert_eq!(z2, z);

    let mut back = vec![0.0; 96];
    let st = unsafe { wdan_denormalize(z.as_ptr(), m.as_ptr(), s.as_ptr(), 96, 1e-5, back.as_mut_ptr()) };
    assert_eq!(st, WdanStatus::Ok);
    assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10));
    unsafe { wdan_normalizer_free(h) };
}

#[test]
fn configuration_errors_set_the_message() {
    wdan_clear_last_error();
    assert!(wdan_last_error_message().is_null());
    let (st, h) = normalizer("db99", 2, 4);
    assert_eq!(st, WdanStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("db99"));
    let (st, _) = normalizer("coif3", 0, 4);
    assert_eq!(st, WdanStatus::Config);
    wdan_clear_last_error();
    assert!(wdan_last_error_message().is_null());
}

#[test]
fn short_windows_are_rejected() {
    let (_, h) = normalizer("coif3", 3, 12);
    let x = signal(2, 4);
    let mut z = vec![0.0; 4];
    let st = unsafe { wdan_normalizer_normalize(h, x.as_ptr(), 4, z.as_mut_ptr(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(st, WdanStatus::Config);
    assert!(last_error().contains("too short"));
    unsafe { wdan_normalizer_free(h) };
}

#[test]
fn null_pointers_are_reported_not_dereferenced() {
    let mut out = 0.0;
    assert_eq!(unsafe { wdan_adf_statistic(ptr::null(), 10, 1, &mut out) }, WdanStatus::NullPointer);
    assert!(last_error().contains("x is null"));
    let x = signal(3, 50);
    assert_eq!(unsafe { wdan_adf_statistic(x.as_ptr(), 50, 1, ptr::null_mut()) }, WdanStatus::NullPointer);
    let mut z = vec![0.0; 50];
    let st = unsafe {
        wdan_normalizer_normalize(ptr::null(), x.as_ptr(), 50, z.as_mut_ptr(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(st, WdanStatus::NullPointer);
    assert_eq!(unsafe { wdan_normalizer_new(ptr::null(), 2, 4, 1e-5, false, &mut ptr::null_mut()) }, WdanStatus::NullPointer);
    let name = CString::new("haar").unwrap();
    assert_eq!(
        unsafe { wdan_normalizer_new(name.as_ptr(), 2, 4, 1e-5, false, ptr::null_mut()) },
        WdanStatus::NullPointer
    );
    assert_eq!(unsafe { wdan_model_load(ptr::null(), &mut ptr::null_mut()) }, WdanStatus::NullPointer);
    assert_eq!(unsafe { wdan_model_input_len(ptr::null()) }, 0);
    assert_eq!(unsafe { wdan_model_horizon(ptr::null()) }, 0);
    assert_eq!(unsafe { wdan_normalizer_min_len(ptr::null()) }, 0);
    // freeing null is a no-op
    unsafe {
        wdan_model_free(ptr::null_mut());
        wdan_normalizer_free(ptr::null_mut());
    }
}

#[test]
fn adf_statistic_matches_the_core_library() {
    let x = signal(4, 500);
    let mut out = 0.0;
    assert_eq!(unsafe { wdan_adf_statistic(x.as_ptr(), x.len(), 2, &mut out) }, WdanStatus::Ok);
    assert_eq!(out, wdan::eval::adf_statistic(&x, 2).unwrap().statistic);
    assert_eq!(unsafe { wdan_adf_statistic(x.as_ptr(), 3, 2, &mut out) }, WdanStatus::Data);
}

fn trained_like_bundle(variant: Variant) -> (ModelBundle, String) {
    let (t, h) = (48, 24);
    let norm = NormConfig {
        window_half_width: 4,
        ..NormConfig::default()
    };
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let b = ModelBundle::new(variant, t, h, &PredictorConfig::default(), BackboneKind::Linear, norm.epsilon, &mut r).unwrap();
    let record = b.to_record(&norm, 25);
    let json = serde_json::json!({ "config_digest": "test", "bundle": record }).to_string();
    (b, json)
}

#[test]
fn model_forecasts_match_the_core_library() {
    for variant in Variant::ALL {
        let (bundle, json) = trained_like_bundle(variant);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model_h24.json");
        std::fs::write(&path, &json).unwrap();
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(unsafe { wdan_model_load(cpath.as_ptr(), &mut m) }, WdanStatus::Ok, "{variant}");
        assert_eq!(unsafe { (wdan_model_input_len(m), wdan_model_horizon(m)) }, (48, 24));

        let x = signal(5, 48);
        let mut y = vec![0.0; 24];
        assert_eq!(unsafe { wdan_model_forecast(m, x.as_ptr(), 48, y.as_mut_ptr(), 24) }, WdanStatus::Ok);
        let norm = NormConfig {
            window_half_width: 4,
            ..NormConfig::default()
        };
        let pipeline = Pipeline::new(variant, &norm, 25, 48, 24).unwrap();
        let want = bundle.forecast(&pipeline.prepare(&x, &[0.0; 24]).unwrap()).unwrap();
        assert_eq!(y, want, "{variant}");

        assert_eq!(
            unsafe { wdan_model_forecast(m, x.as_ptr(), 47, y.as_mut_ptr(), 24) },
            WdanStatus::InvalidArgument
        );
        assert!(last_error().contains("input_len 48"));
        unsafe { wdan_model_free(m) };
    }
}

#[test]
fn bare_records_and_bad_documents() {
    let (_, json) = trained_like_bundle(Variant::Wdan);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let bare = CString::new(v["bundle"].to_string()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { wdan_model_from_json(bare.as_ptr(), &mut m) }, WdanStatus::Ok);
    unsafe { wdan_model_free(m) };

    let junk = CString::new("{\"bundle\": 3}").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { wdan_model_from_json(junk.as_ptr(), &mut m) }, WdanStatus::Data);
    assert!(m.is_null());
    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(unsafe { wdan_model_load(missing.as_ptr(), &mut m) }, WdanStatus::Data);
    assert!(last_error().contains("/nonexistent/model.json"));
}

#[test]
fn errors_are_thread_local() {
    let (st, _) = normalizer("nope", 1, 1);
    assert_eq!(st, WdanStatus::Config);
    std::thread::spawn(|| assert!(wdan_last_error_message().is_null())).join().unwrap();
    assert!(last_error().contains("nope"));
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(wdan_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
