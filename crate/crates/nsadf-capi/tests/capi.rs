//! Exercises the C ABI from Rust (direct extern calls) and checks the
//! generated header stays in sync with the exported surface; a small C
//! client is compiled and run against the shared library when a C compiler
//! is available.

use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::ptr;

use nsadf_capi::*;

fn last_error() -> String {
    let needed = nsadf_last_error_message(ptr::null_mut(), 0);
    let mut buf = vec![0u8; needed + 1];
    nsadf_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len());
    String::from_utf8_lossy(&buf[..needed]).into_owned()
}

#[test]
fn simulate_fit_eval_curve_roundtrip() {
    unsafe {
        let family = CString::new("inv_logistic").unwrap();
        let mut series: *mut nsadf_series = ptr::null_mut();
        let st = nsadf_simulate(family.as_ptr(), 3000, 7, 0.3, 0.7, &mut series);
        assert_eq!(st, NsadfStatus::Ok, "{}", last_error());
        assert_eq!(nsadf_series_len(series), 3000);

        let mut x = vec![0.0; 3000];
        let mut y = vec![0.0; 3000];
        assert_eq!(
            nsadf_series_values(series, x.as_mut_ptr(), y.as_mut_ptr()),
            NsadfStatus::Ok
        );
        assert!(x.iter().all(|v| *v >= 0.0));

        let cfg = CString::new(r#"{"rays": 11, "degree": 3, "poly_degree": 1}"#).unwrap();
        let mut fit: *mut nsadf_adf_fit = ptr::null_mut();
        let st = nsadf_fit_adf(series, cfg.as_ptr(), &mut fit);
        assert_eq!(st, NsadfStatus::Ok, "{}", last_error());
        assert_eq!(nsadf_adf_ray_count(fit), 11);

        let mut lam = 0.0;
        for use_smooth in [0, 1] {
            let st = nsadf_adf_eval(fit, 0.5, 1500, use_smooth, &mut lam);
            assert_eq!(st, NsadfStatus::Ok, "{}", last_error());
            assert!((0.5..=2.0).contains(&lam), "λ = {lam}");
            // endpoints pinned
            assert_eq!(nsadf_adf_eval(fit, 0.0, 1500, use_smooth, &mut lam), NsadfStatus::Ok);
            assert!((lam - 1.0).abs() < 1e-9);
        }

        let mut eta = 0.0;
        assert_eq!(nsadf_adf_eta(fit, 1500, 1, &mut eta), NsadfStatus::Ok);
        assert!((0.3..=1.0).contains(&eta), "η = {eta}");

        let nw = nsadf_adf_ray_count(fit);
        let mut rays = vec![0.0; nw];
        let mut cx = vec![0.0; nw];
        let mut cy = vec![0.0; nw];
        let st = nsadf_return_curve(
            fit,
            1e-3,
            1500,
            1,
            rays.as_mut_ptr(),
            cx.as_mut_ptr(),
            cy.as_mut_ptr(),
        );
        assert_eq!(st, NsadfStatus::Ok, "{}", last_error());
        assert_eq!(rays[0], 0.0);
        assert_eq!(*rays.last().unwrap(), 1.0);
        assert!(cx.windows(2).all(|w| w[0] <= w[1] + 1e-9), "x ordered");

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(nsadf_smooth_model_json(fit, &mut json), NsadfStatus::Ok);
        let text = std::ffi::CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("nsadf/bernstein/v1"));
        nsadf_string_free(json);

        nsadf_adf_fit_free(fit);
        nsadf_series_free(series);
    }
}

#[test]
fn error_paths_report_status_and_message() {
    unsafe {
        let mut series: *mut nsadf_series = ptr::null_mut();
        // unknown family
        let family = CString::new("weibull").unwrap();
        let st = nsadf_simulate(family.as_ptr(), 10, 0, 0.0, 0.0, &mut series);
        assert_eq!(st, NsadfStatus::InvalidArgument);
        assert!(last_error().contains("weibull"), "{}", last_error());
        // null pointers
        let st = nsadf_simulate(ptr::null(), 10, 0, 0.0, 0.0, &mut series);
        assert_eq!(st, NsadfStatus::NullPointer);
        // negative values are not exponential-margin data
        let x = [1.0, -2.0];
        let y = [0.5, 0.5];
        let st = nsadf_series_from_arrays(x.as_ptr(), y.as_ptr(), 2, &mut series);
        assert_eq!(st, NsadfStatus::InvalidArgument);
        // bad fit config key rejected (strict schema)
        let family = CString::new("inv_logistic").unwrap();
        assert_eq!(
            nsadf_simulate(family.as_ptr(), 600, 1, 0.0, 0.0, &mut series),
            NsadfStatus::Ok
        );
        let cfg = CString::new(r#"{"unknown_key": 1}"#).unwrap();
        let mut fit: *mut nsadf_adf_fit = ptr::null_mut();
        let st = nsadf_fit_adf(series, cfg.as_ptr(), &mut fit);
        assert_eq!(st, NsadfStatus::InvalidArgument);
        // time outside the grid
        let cfg = CString::new(r#"{"rays": 5, "degree": 2, "poly_degree": 1}"#).unwrap();
        assert_eq!(nsadf_fit_adf(series, cfg.as_ptr(), &mut fit), NsadfStatus::Ok);
        let mut lam = 0.0;
        let st = nsadf_adf_eval(fit, 0.5, 99_999, 0, &mut lam);
        assert_eq!(st, NsadfStatus::InvalidArgument);
        nsadf_adf_fit_free(fit);
        nsadf_series_free(series);
    }
}

#[test]
fn header_matches_exported_surface() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/nsadf.h")).unwrap();
    let source = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let names_in = |text: &str, pat: &str| -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        let mut rest = text;
        while let Some(pos) = rest.find(pat) {
            rest = &rest[pos + pat.len()..];
            let name: String = rest
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect();
            if name.starts_with("nsadf_") {
                out.insert(name);
            }
        }
        out
    };
    let mut exported = names_in(&source, "extern \"C\" fn ");
    exported.remove("nsadf_series");
    exported.remove("nsadf_adf_fit");
    let mut declared = std::collections::BTreeSet::new();
    for line in header.lines() {
        if let Some(pos) = line.find("nsadf_") {
            let tail = &line[pos..];
            if tail.contains('(') {
                let name: String = tail
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_')
                    .collect();
                declared.insert(name);
            }
        }
    }
    for f in &exported {
        assert!(declared.contains(f), "header missing declaration for {f}");
    }
}

#[test]
fn c_client_compiles_and_runs() {
    // best-effort end-to-end check through a real C compiler
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| {
            std::process::Command::new(c)
                .arg("--version")
                .output()
                .is_ok()
        })
        .copied();
    let Some(cc) = cc else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // the cdylib lands in target/<profile>/ next to this test's deps dir
    let mut lib_dir = PathBuf::from(std::env::current_exe().unwrap());
    lib_dir.pop(); // test binary
    lib_dir.pop(); // deps/
    let lib = lib_dir.join("libnsadf_capi.so");
    if !lib.exists() {
        eprintln!("cdylib not found at {}; skipping", lib.display());
        return;
    }
    let tmp = tempfile_dir();
    let c_src = tmp.join("client.c");
    std::fs::write(
        &c_src,
        r#"
#include "nsadf.h"
#include <stdio.h>
int main(void) {
    nsadf_series *s = NULL;
    if (nsadf_simulate("inv_logistic", 1500, 3, 0.3, 0.7, &s) != NSADF_STATUS_OK) return 1;
    if (nsadf_series_len(s) != 1500) return 2;
    nsadf_adf_fit *fit = NULL;
    if (nsadf_fit_adf(s, "{\"rays\": 5, \"degree\": 2, \"poly_degree\": 1}", &fit) != NSADF_STATUS_OK) return 3;
    double lam = 0.0;
    if (nsadf_adf_eval(fit, 0.5, 750, 1, &lam) != NSADF_STATUS_OK) return 4;
    if (!(lam > 0.4 && lam < 2.5)) return 5;
    nsadf_adf_fit_free(fit);
    nsadf_series_free(s);
    printf("ok %f\n", lam);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.join("client");
    let status = std::process::Command::new(cc)
        .arg(&c_src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lnsadf_capi")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = std::process::Command::new(&exe)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "C client exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok"));
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nsadf-capi-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
