//! End-to-end CLI tests: subcommand chaining, exit codes, manifests, and
//! the reproducibility contract (identical runs and worker counts produce
//! byte-identical artifacts).

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nsadf"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nsadf-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn simulate_happy_path_emits_manifest() {
    let out = tmp("sim");
    let status = bin()
        .args([
            "simulate",
            "--family",
            "inv_logistic",
            "--n",
            "1000",
            "--seed",
            "1",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 2);
    let csv = read(&out.join("series.csv"));
    assert!(csv.starts_with("t,x,y\n"));
    assert_eq!(csv.lines().count(), 1001);
    let sidecar = read(&out.join("simulate.json"));
    assert!(sidecar.contains("nsadf/simulate/v1"));
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    let out = bin().args(["simulate", "--bogus", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn bad_family_exits_2() {
    let out = bin()
        .args([
            "simulate", "--family", "frank", "--n", "10", "--out", "/tmp/never",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let a = tmp("det-a");
    let b = tmp("det-b");
    for (dir, workers) in [(&a, "1"), (&b, "8")] {
        let status = bin()
            .args([
                "--workers",
                workers,
                "simulate",
                "--family",
                "gauge_model12",
                "--n",
                "400",
                "--seed",
                "11",
                "--mcmc-burn-in",
                "2000",
                "--out",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(read(&a.join("series.csv")), read(&b.join("series.csv")));
    assert_eq!(read(&a.join("manifest.json")), read(&b.join("manifest.json")));
}

/// Full artifact chain on a small surrogate: fit-margins → transform →
/// fit-adf → return-curve on both margins, all byte-reproducible.
#[test]
fn pipeline_chain_and_determinism() {
    let base = tmp("chain");
    std::fs::create_dir_all(&base).unwrap();

    // surrogate raw data via the library (the case-study path covers the
    // CLI generator)
    let spec = nsadf::surrogate::SurrogateSpec {
        n_years: 30,
        obs_per_year: 90,
        seed: 3,
        ..Default::default()
    };
    let raw = nsadf::surrogate::generate_surrogate(&spec).unwrap();
    let raw_csv = base.join("raw.csv");
    std::fs::write(
        &raw_csv,
        nsadf::io::series_to_csv(&raw.t, raw.day.as_deref(), &raw.x, &raw.y),
    )
    .unwrap();

    let margins_cfg = base.join("margins_cfg.json");
    std::fs::write(
        &margins_cfg,
        r#"{
  "x": {"loc_basis": {"poly_degree":1,"harmonics":1,"period":90.0},
        "scale_basis": {"poly_degree":1,"harmonics":0,"period":90.0},
        "tail_basis": {"poly_degree":1,"harmonics":0,"period":90.0},
        "threshold_quantile": 0.9, "penalty": 0.0},
  "y": {"loc_basis": {"poly_degree":1,"harmonics":1,"period":90.0},
        "scale_basis": {"poly_degree":1,"harmonics":0,"period":90.0},
        "tail_basis": {"poly_degree":1,"harmonics":0,"period":90.0},
        "threshold_quantile": 0.9, "penalty": 0.0}
}"#,
    )
    .unwrap();

    let margins_out = base.join("margins");
    let status = bin()
        .args(["fit-margins", "--data"])
        .arg(&raw_csv)
        .args(["--config"])
        .arg(&margins_cfg)
        .args(["--out"])
        .arg(&margins_out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let margins_json = margins_out.join("margins.json");
    assert!(read(&margins_json).contains("nsadf/margins/v1"));

    let trans_out = base.join("exp");
    let status = bin()
        .args(["transform", "--data"])
        .arg(&raw_csv)
        .args(["--margins"])
        .arg(&margins_json)
        .args(["--out"])
        .arg(&trans_out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let exp_csv = trans_out.join("exponential.csv");
    assert!(read(&exp_csv).starts_with("t,day,x,y\n"));

    let adf_cfg = base.join("adf_cfg.json");
    std::fs::write(
        &adf_cfg,
        r#"{"rays": 21,
  "qr_basis": {"poly_degree":1,"harmonics":0,"period":90.0},
  "bernstein": {"degree":4, "link":"logit", "basis": {"poly_degree":1,"harmonics":0,"period":90.0},
                 "starts":3, "max_evals":4000, "ftol":1e-6, "seed":0}}"#,
    )
    .unwrap();
    let adf_out = base.join("adf");
    let status = bin()
        .args(["fit-adf", "--data"])
        .arg(&exp_csv)
        .args(["--config"])
        .arg(&adf_cfg)
        .args(["--plot-t", "45,1395,2655", "--out"])
        .arg(&adf_out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(adf_out.join("adf_grid.json").exists());
    assert!(adf_out.join("bernstein.json").exists());
    let svg = read(&adf_out.join("adf_curves.svg"));
    assert_eq!(svg.matches("<polyline").count(), 3);

    // exponential-margin curves from the smooth estimator
    let curve_out = base.join("curves-exp");
    let status = bin()
        .args(["return-curve", "--adf"])
        .arg(adf_out.join("adf_grid.json"))
        .args(["--bernstein"])
        .arg(adf_out.join("bernstein.json"))
        .args(["--p", "0.0001", "--t", "45", "--t", "2655", "--margin", "exp", "--svg", "--out"])
        .arg(&curve_out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let c = read(&curve_out.join("curve_t45.csv"));
    assert!(c.contains("margin=exponential"));
    assert!(curve_out.join("curves.svg").exists());

    // original margins require the marginal models
    let curve_orig = base.join("curves-orig");
    let status = bin()
        .args(["return-curve", "--adf"])
        .arg(adf_out.join("adf_grid.json"))
        .args(["--p", "0.0001", "--t", "45", "--margin", "original", "--margins"])
        .arg(&margins_json)
        .args(["--out"])
        .arg(&curve_orig)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(read(&curve_orig.join("curve_t45.csv")).contains("margin=original"));

    // --margin original without --margins is a config error
    let status = bin()
        .args(["return-curve", "--adf"])
        .arg(adf_out.join("adf_grid.json"))
        .args(["--p", "0.0001", "--t", "45", "--margin", "original", "--out", "/tmp/never2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // re-running fit-adf reproduces artifacts byte for byte
    let adf_again = base.join("adf2");
    let status = bin()
        .args(["fit-adf", "--data"])
        .arg(&exp_csv)
        .args(["--config"])
        .arg(&adf_cfg)
        .args(["--plot-t", "45,1395,2655", "--out"])
        .arg(&adf_again)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(
        read(&adf_out.join("adf_grid.json")),
        read(&adf_again.join("adf_grid.json"))
    );
    assert_eq!(
        read(&adf_out.join("bernstein.json")),
        read(&adf_again.join("bernstein.json"))
    );
}

#[test]
fn schema_mismatch_exits_2() {
    let base = tmp("schema");
    std::fs::create_dir_all(&base).unwrap();
    let fake = base.join("margins.json");
    std::fs::write(&fake, r#"{"schema": "nsadf/margins/v999", "payload": {}}"#).unwrap();
    let raw = base.join("raw.csv");
    std::fs::write(&raw, "t,x,y\n1,1.0,2.0\n2,2.0,1.0\n").unwrap();
    let out = bin()
        .args(["transform", "--data"])
        .arg(&raw)
        .args(["--margins"])
        .arg(&fake)
        .args(["--out"])
        .arg(base.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
}

#[test]
fn evaluate_writes_tables() {
    let out = tmp("eval");
    let status = bin()
        .args([
            "evaluate",
            "--families",
            "inv_logistic",
            "--replicates",
            "3",
            "--n",
            "1500",
            "--seed",
            "2",
            "--degree",
            "3",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let mise = read(&out.join("mise_table.csv"));
    assert!(mise.starts_with("copula,time,mise_qr,mise_bp\n"));
    assert_eq!(mise.lines().count(), 4); // header + 3 times
    assert!(out.join("ise_median_table.csv").exists());
    assert!(out.join("envelope_inv_logistic_w0.5.csv").exists());
    assert!(out.join("adf_inv_logistic_middle.csv").exists());
}

#[test]
fn case_study_small_run() {
    let base = tmp("case");
    std::fs::create_dir_all(&base).unwrap();
    let cfg = base.join("case.json");
    std::fs::write(
        &cfg,
        r#"{
  "surrogate": {"n_years": 12, "obs_per_year": 90, "seed": 4},
  "pipeline": {
    "rays": 11,
    "curve_years": [1, 12],
    "rolling_half_window": 270,
    "rolling_stride": 90,
    "bernstein": {"degree": 4, "link": "logit", "max_evals": 4000},
    "bootstrap": {"segment_len": 450, "block_len": 15, "resamples": 2, "seed": 0}
  }
}"#,
    )
    .unwrap();
    let out = base.join("run");
    let status = bin()
        .args(["case-study", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0), "case study failed");
    for artifact in [
        "surrogate.csv",
        "margins.json",
        "exponential.csv",
        "adf_grid.json",
        "bernstein.json",
        "curve_exp_t45.csv",
        "curve_original_t45.csv",
        "eta_comparison.csv",
        "adf_bootstrap_band.csv",
        "curves.svg",
        "manifest.json",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let eta = read(&out.join("eta_comparison.csv"));
    assert!(eta.starts_with("center,empirical,lo,hi,model,n_exceedances\n"));
}
