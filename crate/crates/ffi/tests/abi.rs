use std::ffi::{CStr, CString};
use std::ptr;

use dqm_ffi::*;

fn last_error() -> String {
    let p = dqm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn packet() -> *mut DqmWaveFunction {
    let mut h = ptr::null_mut();
    let s = unsafe { dqm_gaussian_new(-20.0, 20.0, 512, DqmBoundary::Periodic, 0.01, 0.0, 1.0, 1.0, 1.0, 1.0, &mut h) };
    assert_eq!(s, DqmStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(dqm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn handle_lifecycle() {
    let h = packet();
    unsafe {
        assert_eq!(dqm_wavefunction_len(h), 512);
        let mut norm = 0.0;
        assert_eq!(dqm_wavefunction_norm(h, &mut norm), DqmStatus::Ok);
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(dqm_wavefunction_evolve_free(h, 1.0), DqmStatus::Ok);
        let mut rho = vec![0.0; 512];
        assert_eq!(dqm_wavefunction_density(h, rho.as_mut_ptr(), rho.len()), DqmStatus::Ok);
        let total: f64 = rho.iter().sum::<f64>() * 40.0 / 512.0;
        assert!((total - 1.0).abs() < 1e-10);
        let mut short = vec![0.0; 10];
        assert_eq!(
            dqm_wavefunction_density(h, short.as_mut_ptr(), short.len()),
            DqmStatus::BufferTooSmall
        );
        dqm_wavefunction_free(h);
        dqm_wavefunction_free(ptr::null_mut());
        assert_eq!(dqm_wavefunction_len(ptr::null()), 0);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut h = ptr::null_mut();
    let s = unsafe { dqm_gaussian_new(-1.0, 1.0, 100, DqmBoundary::Periodic, 0.01, 0.0, 0.2, 0.0, 1.0, 1.0, &mut h) };
    assert_eq!(s, DqmStatus::InvalidInput);
    assert!(h.is_null());
    assert!(last_error().contains("power-of-two"));

    let s = unsafe { dqm_wavefunction_norm(ptr::null(), &mut 0.0) };
    assert_eq!(s, DqmStatus::NullPointer);
    assert!(last_error().contains("handle"));

    let mut tau = 0.0;
    let mut se = 0.0;
    let s = unsafe { dqm_mean_collapse_time(2.0, 0.5, 100, 1, &mut tau, &mut se) };
    assert_eq!(s, DqmStatus::InvalidInput);
}

#[test]
fn scalar_entry_points() {
    let (mut min, mut mass) = (0.0, 0.0);
    let s = unsafe { dqm_minimum_measurable_length(4.0, 1, &mut min, &mut mass) };
    assert_eq!(s, DqmStatus::Ok);
    assert!((min - 3.0).abs() < 1e-9);
    assert!((mass - 1.0).abs() < 1e-5);

    let (mut tau, mut se) = (0.0, 0.0);
    let s = unsafe { dqm_mean_collapse_time(0.1, 0.5, 2000, 9, &mut tau, &mut se) };
    assert_eq!(s, DqmStatus::Ok);
    assert!((tau - 25.0).abs() < 3.0 * se);
}

#[test]
fn config_round_trip() {
    let cfg = CString::new(r#"{"experiment":"planck","seed":1}"#).unwrap();
    let mut out = ptr::null_mut();
    let s = unsafe { dqm_run_config_json(cfg.as_ptr(), &mut out) };
    assert_eq!(s, DqmStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { dqm_string_free(out) };
    assert!(text.contains("\"exponent_fit\":0.333"), "{text}");

    let bad = CString::new(r#"{"experiment":"planck"}"#).unwrap();
    let s = unsafe { dqm_run_config_json(bad.as_ptr(), &mut out) };
    assert_eq!(s, DqmStatus::Config);
    assert!(last_error().contains("seed"));
}
