use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use mcbc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mcbc_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn wet_dry(n: usize, seed: u64, p_dry: f64, scale: f64) -> Vec<f64> {
    let mut x = seed;
    (0..n)
        .map(|_| {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let u = (x >> 11) as f64 / (1u64 << 53) as f64;
            if u < p_dry {
                0.0
            } else {
                (u - p_dry) * scale + 0.1
            }
        })
        .collect()
}

fn series(values: &[f64]) -> *mut McbcSeries {
    let mut out = ptr::null_mut();
    let st = unsafe { mcbc_series_new(1990, 1, 1, values.as_ptr(), values.len(), &mut out) };
    assert_eq!(st, McbcStatus::Ok, "{}", last_error());
    out
}

fn values(s: *const McbcSeries) -> Vec<f64> {
    let n = unsafe { mcbc_series_len(s) };
    let mut buf = vec![0.0; n];
    let st = unsafe { mcbc_series_values(s, buf.as_mut_ptr(), n) };
    assert_eq!(st, McbcStatus::Ok);
    buf
}

fn calibrate(method: &str, obs: *const McbcSeries, model: *const McbcSeries) -> *mut McbcParams {
    let m = CString::new(method).unwrap();
    let mut p = ptr::null_mut();
    let st = unsafe { mcbc_calibrate(m.as_ptr(), obs, model, ptr::null(), &mut p) };
    assert_eq!(st, McbcStatus::Ok, "{}", last_error());
    p
}

fn apply(p: *const McbcParams, model: *const McbcSeries) -> Vec<f64> {
    let mut out = ptr::null_mut();
    let st = unsafe { mcbc_apply(p, model, ptr::null(), &mut out) };
    assert_eq!(st, McbcStatus::Ok, "{}", last_error());
    let v = values(out);
    unsafe { mcbc_series_free(out) };
    v
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[test]
fn series_round_trip_keeps_missing_values() {
    let v = [0.0, 1.5, f64::NAN, 3.0];
    let s = series(&v);
    assert!(same(&values(s), &v));
    let (mut y, mut m, mut d) = (0, 0, 0);
    assert_eq!(
        unsafe { mcbc_series_start(s, &mut y, &mut m, &mut d) },
        McbcStatus::Ok
    );
    assert_eq!((y, m, d), (1990, 1, 1));
    let mut small = [0.0; 2];
    let st = unsafe { mcbc_series_values(s, small.as_mut_ptr(), 2) };
    assert_eq!(st, McbcStatus::InvalidArgument);
    unsafe { mcbc_series_free(s) };
}

#[test]
fn csv_input_and_parse_errors() {
    let good = CString::new("date,rain\n2000-01-01,1.0\n2000-01-02,\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { mcbc_series_from_csv(good.as_ptr(), &mut s) },
        McbcStatus::Ok
    );
    let v = values(s);
    assert_eq!(v[0], 1.0);
    assert!(v[1].is_nan());
    unsafe { mcbc_series_free(s) };

    let bad = CString::new("date,rain\n2000-01-01,abc\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { mcbc_series_from_csv(bad.as_ptr(), &mut s) },
        McbcStatus::Parse
    );
    assert!(s.is_null());
    assert!(last_error().contains("line"));
}

#[test]
fn every_method_calibrates_applies_and_round_trips_json() {
    let n = 365 * 8;
    let obs = series(&wet_dry(n, 1, 0.6, 40.0));
    let model = series(&wet_dry(n, 2, 0.4, 15.0));
    for method in ["loci", "qm", "mc-loci", "mc-qm"] {
        let p = calibrate(method, obs, model);
        let name = unsafe { CStr::from_ptr(mcbc_params_method(p)) };
        assert_eq!(name.to_str().unwrap(), method);
        let direct = apply(p, model);
        assert_eq!(direct.len(), n);

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(unsafe { mcbc_params_to_json(p, &mut json) }, McbcStatus::Ok);
        let mut reloaded = ptr::null_mut();
        assert_eq!(
            unsafe { mcbc_params_from_json(json, &mut reloaded) },
            McbcStatus::Ok
        );
        assert!(same(&apply(reloaded, model), &direct), "{method}");
        unsafe {
            mcbc_string_free(json);
            mcbc_params_free(reloaded);
            mcbc_params_free(p);
        }
    }
    unsafe {
        mcbc_series_free(obs);
        mcbc_series_free(model);
    }
}

#[test]
fn identical_inputs_keep_wet_days_wet() {
    let v = wet_dry(365 * 6, 5, 0.55, 30.0);
    let s = series(&v);
    let p = calibrate("loci", s, s);
    let corrected = apply(p, s);
    let wet = |xs: &[f64]| xs.iter().filter(|x| **x > 0.85).count();
    assert_eq!(wet(&corrected), wet(&v));
    unsafe {
        mcbc_params_free(p);
        mcbc_series_free(s);
    }
}

#[test]
fn options_json_is_validated() {
    let v = wet_dry(365 * 6, 5, 0.55, 30.0);
    let s = series(&v);
    let m = CString::new("loci").unwrap();
    let mut p = ptr::null_mut();
    let opts = CString::new(r#"{"t_x": -1.0}"#).unwrap();
    let st = unsafe { mcbc_calibrate(m.as_ptr(), s, s, opts.as_ptr(), &mut p) };
    assert_eq!(st, McbcStatus::InvalidArgument);
    assert!(p.is_null());

    let opts = CString::new(r#"{"scheme": {"month_to_period": [1,2,3]}}"#).unwrap();
    let st = unsafe { mcbc_calibrate(m.as_ptr(), s, s, opts.as_ptr(), &mut p) };
    assert_eq!(st, McbcStatus::InvalidArgument);
    assert!(last_error().contains("12"), "{}", last_error());

    let opts = CString::new(r#"{"t_x": 1.0, "scheme": {"month_to_period": [1,1,1,1,1,1,1,1,1,1,1,1], "dry_season_start_month": 5, "annual_year_start_month": 8}}"#).unwrap();
    let st = unsafe { mcbc_calibrate(m.as_ptr(), s, s, opts.as_ptr(), &mut p) };
    assert_eq!(st, McbcStatus::Ok, "{}", last_error());
    let mut json = ptr::null_mut();
    unsafe { mcbc_params_to_json(p, &mut json) };
    let text = unsafe { CStr::from_ptr(json) }
        .to_str()
        .unwrap()
        .to_string();
    assert!(text.contains("\"t_x\": 1.0"), "{text}");
    unsafe {
        mcbc_string_free(json);
        mcbc_params_free(p);
        mcbc_series_free(s);
    }
}

#[test]
fn null_arguments_are_reported() {
    let mut p = ptr::null_mut();
    let st = unsafe { mcbc_calibrate(ptr::null(), ptr::null(), ptr::null(), ptr::null(), &mut p) };
    assert_eq!(st, McbcStatus::NullPointer);
    assert!(!last_error().is_empty());
    let st = unsafe { mcbc_series_new(1990, 1, 1, ptr::null(), 3, ptr::null_mut()) };
    assert_eq!(st, McbcStatus::NullPointer);
    let st = unsafe { mcbc_series_new(1990, 2, 30, ptr::null(), 0, &mut ptr::null_mut()) };
    assert_eq!(st, McbcStatus::InvalidArgument);
    assert_eq!(unsafe { mcbc_series_len(ptr::null()) }, 0);
    assert!(unsafe { mcbc_params_method(ptr::null()) }.is_null());
    unsafe {
        mcbc_series_free(ptr::null_mut());
        mcbc_params_free(ptr::null_mut());
        mcbc_string_free(ptr::null_mut());
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/mcbc.h")).unwrap();
    let source = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 14);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}

fn static_lib() -> PathBuf {
    // integration tests live in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir: &Path = exe.parent().unwrap().parent().unwrap();
    profile_dir.join("libmcbc_ffi.a")
}

#[test]
fn c_program_links_against_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let lib = static_lib();
    assert!(lib.exists(), "{} not built", lib.display());
    let status = Command::new("cc")
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 0.1.0"));
}
