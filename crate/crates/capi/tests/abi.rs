//! Exercises the C ABI through the exported extern "C" functions.

use std::ffi::{CStr, CString};

use calabiflow_capi::*;

const TAU: f64 = 2.0 * std::f64::consts::PI;
const PI: f64 = std::f64::consts::PI;

fn cosine_values(n: usize, amplitude: f64) -> Vec<f64> {
    let h = TAU / n as f64;
    let mut v = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            v[iy * n + ix] = amplitude * (ix as f64 * h).cos();
        }
    }
    v
}

#[test]
fn field_lifecycle_and_report() {
    unsafe {
        let field = cf_field_new_torus(32, TAU);
        assert!(!field.is_null());
        assert_eq!(cf_field_len(field), 32 * 32);

        let mut report = CfFunctionalReport::default();
        assert_eq!(cf_functionals_eval(field, &mut report), CfStatus::Ok);
        assert!(report.aubin_i.abs() < 1e-14);
        assert!((report.min_u - 1.0).abs() < 1e-13);

        let eps = 0.25;
        let values = cosine_values(32, eps);
        assert_eq!(
            cf_field_set_values(field, values.as_ptr(), values.len()),
            CfStatus::Ok
        );
        assert_eq!(cf_functionals_eval(field, &mut report), CfStatus::Ok);
        let expect = PI * PI * eps * eps;
        assert!(
            (report.aubin_i - expect).abs() <= 1e-10 * expect,
            "I = {}, expected {expect}",
            report.aubin_i
        );

        let mut back = vec![0.0; values.len()];
        assert_eq!(
            cf_field_get_values(field, back.as_mut_ptr(), back.len()),
            CfStatus::Ok
        );
        assert_eq!(back, values);

        cf_field_free(field);
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut report = CfFunctionalReport::default();
        assert_eq!(
            cf_functionals_eval(std::ptr::null(), &mut report),
            CfStatus::NullArgument
        );
        // Odd grid is rejected.
        assert!(cf_field_new_torus(15, TAU).is_null());
        let msg = CStr::from_ptr(cf_last_error_message()).to_str().unwrap();
        assert!(msg.contains("grid_n"), "unexpected message: {msg}");
        // Non-Kähler samples are reported through the status code.
        let field = cf_field_new_torus(32, TAU);
        let values = cosine_values(32, 3.0);
        assert_eq!(
            cf_field_set_values(field, values.as_ptr(), values.len()),
            CfStatus::Ok
        );
        assert_eq!(
            cf_functionals_eval(field, &mut report),
            CfStatus::NotKahler
        );
        cf_field_free(field);
        // Missing file surfaces as null + message.
        let path = CString::new("/nonexistent/field.json").unwrap();
        assert!(cf_field_load_json(path.as_ptr()).is_null());
    }
}

#[test]
fn decay_fit_through_abi() {
    unsafe {
        let ts: Vec<f64> = (0..30).map(|k| 0.1 * k as f64).collect();
        let cas: Vec<f64> = ts.iter().map(|t| (-3.0 * t).exp()).collect();
        let (mut rate, mut r2) = (0.0, 0.0);
        assert_eq!(
            cf_fit_decay(ts.as_ptr(), cas.as_ptr(), ts.len(), 1.0, &mut rate, &mut r2),
            CfStatus::Ok
        );
        assert!((rate - 3.0).abs() < 1e-10);
        assert!((r2 - 1.0).abs() < 1e-10);

        assert_eq!(
            cf_fit_decay(ts.as_ptr(), cas.as_ptr(), 2, 1.0, &mut rate, &mut r2),
            CfStatus::InsufficientData
        );
    }
}

#[test]
fn flow_run_through_abi() {
    unsafe {
        let config = CString::new(
            r#"{
                "geometry": {"backend": "torus", "grid_n": 32, "period": 6.283185307179586},
                "initial": {"kind": "cosine", "amplitude": 0.01, "jx": 1, "ky": 0},
                "dt_init": 1e-3, "dt_max": 0.1, "t_max": 60.0,
                "stop_calabi_tol": 1e-14, "a": 1.0, "monitor_every": 1
            }"#,
        )
        .unwrap();
        let mut summary: *mut std::ffi::c_char = std::ptr::null_mut();
        let status = cf_flow_run_json(config.as_ptr(), &mut summary);
        assert_eq!(status, CfStatus::Ok);
        assert!(!summary.is_null());
        let text = CStr::from_ptr(summary).to_str().unwrap().to_owned();
        cf_string_free(summary);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["terminal_status"], "converged");
        let rate = parsed["decay"]["rate"].as_f64().unwrap();
        assert!((rate - 0.5).abs() < 0.05, "rate {rate}");

        // Malformed JSON is an invalid-argument failure.
        let bad = CString::new("{not json").unwrap();
        assert_eq!(
            cf_flow_run_json(bad.as_ptr(), std::ptr::null_mut()),
            CfStatus::InvalidArgument
        );
    }
}

#[test]
fn quadratures_through_abi() {
    unsafe {
    let mut v = 0.0;
    assert_eq!(cf_lp_gradient_norm(10.0, 1.0, &mut v), CfStatus::Ok);
    assert!((v - 4.0375654368092831).abs() < 1e-7);
    assert_eq!(cf_lp_upper_bound(1.0, &mut v), CfStatus::Ok);
    assert!((v - PI * PI / 2.0).abs() < 1e-8);
    assert_eq!(
        cf_lp_upper_bound(2.0, &mut v),
        CfStatus::InvalidArgument
    );
    assert_eq!(
        cf_lp_gradient_norm(0.5, 1.0, &mut v),
        CfStatus::InvalidArgument
    );
    assert!(!cf_version().is_null());
    }
}
