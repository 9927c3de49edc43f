use std::ffi::{c_char, CStr, CString};
use std::ptr;

use paraslab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        ps_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn params(n: u32, p: f64, q: f64) -> *mut PsParams {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ps_params_new(n, p, q, 1.0, 1.0, &mut out) },
        PsStatus::Ok
    );
    out
}

#[test]
fn classify_and_exponents() {
    let p = params(3, 2.0, 3.0);
    let mut case = 99;
    let mut e = PsExponents::default();
    unsafe {
        assert_eq!(ps_classify(p, &mut case), PsStatus::Ok);
        assert_eq!(ps_exponents(p, &mut e), PsStatus::Ok);
        ps_params_free(p);
    }
    assert_eq!(case, 0);
    assert!((e.lambda_mu - 1.2).abs() < 1e-14 && (e.r2_star - 1.875).abs() < 1e-14);
}

#[test]
fn invalid_input_sets_codes_and_messages() {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ps_params_new(2, 3.0, 2.0, 1.0, 1.0, &mut out) },
        PsStatus::InvalidParams
    );
    assert!(out.is_null());
    assert!(last_error().contains("p <= q"));
    assert_eq!(
        unsafe { ps_classify(ptr::null(), ptr::null_mut()) },
        PsStatus::NullPointer
    );
    let len = unsafe { ps_last_error(ptr::null_mut(), 0) };
    assert_eq!(len, "params is null".len());
    unsafe {
        ps_params_free(ptr::null_mut());
        ps_field_free(ptr::null_mut());
        ps_report_free(ptr::null_mut());
    }
}

#[test]
fn heat_flow_conserves_mass() {
    let m = 64;
    let values: Vec<f64> = (0..m)
        .map(|i| if (28..36).contains(&i) { 1.0 } else { 0.0 })
        .collect();
    let mut f = ptr::null_mut();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(
            ps_field_from_values(1, m, 8.0, values.as_ptr(), m, &mut f),
            PsStatus::Ok
        );
        assert_eq!(ps_heat_flow(f, 1.0, 0.1, &mut g), PsStatus::Ok);
        assert_eq!(ps_field_len(g), m);
        let mut buf = vec![0.0; m];
        assert_eq!(ps_field_values(g, buf.as_mut_ptr(), m), PsStatus::Ok);
        assert!((buf.iter().sum::<f64>() - 8.0).abs() < 1e-12);
        assert!(buf.iter().all(|v| *v >= 0.0));
        assert_eq!(
            ps_field_values(g, buf.as_mut_ptr(), m - 1),
            PsStatus::InvalidArgument
        );
        ps_field_free(f);
        ps_field_free(g);
    }
}

#[test]
fn evolve_small_and_large_case_a_data() {
    let p = params(1, 4.0, 4.0);
    for (c, expected) in [
        (0.05, PsRunStatus::Converged),
        (50.0, PsRunStatus::Diverged),
    ] {
        let (mut mu, mut nu, mut r) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        unsafe {
            assert_eq!(
                ps_field_optimal(p, c, c, 0.0, 8.0, 256, &mut mu, &mut nu),
                PsStatus::Ok
            );
            assert_eq!(ps_evolve(p, mu, nu, 1.0, 400, &mut r), PsStatus::Ok);
            let mut status = PsRunStatus::MaxIter;
            assert_eq!(ps_report_status(r, &mut status), PsStatus::Ok);
            assert_eq!(status, expected);
            let k = ps_report_checkpoints(r);
            assert_eq!(k, 8);
            let (mut t, mut su) = (vec![0.0; k], vec![0.0; k]);
            assert_eq!(
                ps_report_sups(r, t.as_mut_ptr(), su.as_mut_ptr(), ptr::null_mut(), k),
                PsStatus::Ok
            );
            assert!(t.windows(2).all(|w| w[1] > w[0]) && su.iter().all(|v| *v > 0.0));
            ps_report_free(r);
            ps_field_free(mu);
            ps_field_free(nu);
        }
    }
    unsafe { ps_params_free(p) };
}

#[test]
fn run_config_maps_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = CString::new(format!(
        "task = \"classify\"\noutput = {:?}\n[params]\nn = 3\np = 2\nq = 3\n",
        dir.path().display().to_string()
    ))
    .unwrap();
    let mut code = -1;
    assert_eq!(
        unsafe { ps_run_config(good.as_ptr(), &mut code) },
        PsStatus::Ok
    );
    assert_eq!(code, 0);
    assert!(dir.path().join("report.json").exists());
    let bad = CString::new("task = \"classify\"\nalpha_typo = 1\n[params]\nn = 3\np = 2\nq = 3\n")
        .unwrap();
    assert_eq!(
        unsafe { ps_run_config(bad.as_ptr(), &mut code) },
        PsStatus::Config
    );
    assert_eq!(code, 2);
    assert!(last_error().contains("alpha_typo"));
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(ps_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/paraslab.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    for name in src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
    {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    // syntax check with the system C compiler when one is present
    if let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(dir.join("include/paraslab.h"))
        .output()
    {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
