use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pifa_core::tensor::write_pft;
use pifa_core::DenseMatrix;
use serde_json::Value;
use tempfile::TempDir;

fn pifa(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pifa"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PIFA_THREADS")
        .output()
        .expect("spawn pifa")
}

fn ok(args: &[&str], cwd: &Path) -> Value {
    let out = pifa(args, cwd);
    assert!(
        out.status.success(),
        "pifa {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn bundle() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    ok(&["generate", "bundle", "--seed", "3", "--out", "b"], dir.path());
    let root = dir.path().to_path_buf();
    (dir, root)
}

#[test]
fn factorize_reports_pifa_count() {
    let dir = TempDir::new().unwrap();
    let cwd = dir.path();
    ok(
        &[
            "generate", "matrix", "--rows", "64", "--cols", "48", "--rank", "16", "--seed", "5", "--out", "w.pft",
        ],
        cwd,
    );
    let summary = ok(&["factorize", "--in", "w.pft", "--rank", "16", "--out", "l.pifl"], cwd);
    assert_eq!(summary["param_count"], 1552);
    assert_eq!(summary["lowrank_param_count"], 16 * 112);
    assert!(summary["rel_reconstruction_error"].as_f64().unwrap() < 1e-10);
    assert!(cwd.join("l.pifl.run.json").exists());

    let lower = ok(&["factorize", "--in", "w.pft", "--rank", "8", "--out", "l8.pifl"], cwd);
    assert_eq!(lower["rank"], 8);
}

#[test]
fn factorize_rank_above_numerical_rank_fails() {
    let dir = TempDir::new().unwrap();
    let cwd = dir.path();
    ok(
        &[
            "generate", "matrix", "--rows", "64", "--cols", "48", "--rank", "16", "--out", "w.pft",
        ],
        cwd,
    );
    let out = pifa(&["factorize", "--in", "w.pft", "--rank", "20", "--out", "l.pifl"], cwd);
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("numerical rank 16"), "{msg}");
    assert!(!cwd.join("l.pifl").exists());
}

#[test]
fn factorize_output_round_trips_through_inspect() {
    let dir = TempDir::new().unwrap();
    let cwd = dir.path();
    ok(
        &[
            "generate", "matrix", "--rows", "40", "--cols", "30", "--rank", "7", "--out", "w.pft",
        ],
        cwd,
    );
    let summary = ok(&["factorize", "--in", "w.pft", "--rank", "7", "--out", "l.pifl"], cwd);
    let info = ok(&["inspect", "l.pifl"], cwd);
    assert_eq!(info["type"], "pifa");
    assert_eq!(info["m"], 40);
    assert_eq!(info["n"], 30);
    assert_eq!(info["rank"], 7);
    assert_eq!(info["pivots"], summary["pivots"]);
    assert_eq!(info["bytes"], summary["bytes_measured"]);

    let dense = ok(&["inspect", "w.pft"], cwd);
    assert_eq!(dense["rows"], 40);
}

#[test]
fn compress_mpifa_meets_budget() {
    let (_dir, cwd) = bundle();
    let report = ok(
        &[
            "compress",
            "--model",
            "b/manifest.json",
            "--calib",
            "b/calib.pft",
            "--mode",
            "mpifa",
            "--density",
            "0.5",
            "--out",
            "c",
        ],
        &cwd,
    );
    let budget = &report["budget"];
    assert!(budget["params"].as_u64().unwrap() as f64 <= 0.5 * budget["dense_params"].as_u64().unwrap() as f64);
    for layer in report["layers"].as_array().unwrap() {
        assert_eq!(layer["method"], "mpifa");
        assert!(layer["param_count"].as_f64().unwrap() <= 0.5 * layer["dense_param_count"].as_f64().unwrap());
    }
    assert!(cwd.join("c/manifest.json").exists());
    assert!(cwd.join("c/conditions.json").exists());
    let run = read_json(cwd.join("c/run.json"));
    assert_eq!(run["config"]["density"], 0.5);
    assert_eq!(run["config"]["lambda"], 0.25);

    let info = ok(&["inspect", "c/manifest.json"], &cwd);
    assert_eq!(info["layers"].as_array().unwrap().len(), 2);
}

#[test]
fn compress_is_deterministic() {
    let (_dir, cwd) = bundle();
    for out in ["c1", "c2"] {
        ok(
            &[
                "compress",
                "--model",
                "b/manifest.json",
                "--calib",
                "b/calib.pft",
                "--density",
                "0.6",
                "--out",
                out,
            ],
            &cwd,
        );
    }
    for file in ["layer0.pifl", "layer1.pifl", "manifest.json"] {
        let a = std::fs::read(cwd.join("c1").join(file)).unwrap();
        let b = std::fs::read(cwd.join("c2").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn svd_matches_whitened_svd_under_identity_gram() {
    let dir = TempDir::new().unwrap();
    let cwd = dir.path();
    ok(
        &[
            "generate",
            "network",
            "--dims",
            "24,20",
            "--activation",
            "identity",
            "--seed",
            "2",
            "--out",
            "net",
        ],
        cwd,
    );
    write_pft(cwd.join("eye.pft"), &DenseMatrix::<f64>::identity(24)).unwrap();
    ok(
        &[
            "generate",
            "inputs",
            "--dim",
            "24",
            "--cols",
            "64",
            "--seed",
            "9",
            "--out",
            "probes.pft",
        ],
        cwd,
    );
    for mode in ["svd", "whitened-svd"] {
        ok(
            &[
                "compress",
                "--model",
                "net/manifest.json",
                "--calib",
                "eye.pft",
                "--mode",
                mode,
                "--density",
                "0.4",
                "--out",
                mode,
            ],
            cwd,
        );
    }
    let cmp = ok(
        &[
            "eval",
            "--a",
            "svd/manifest.json",
            "--b",
            "whitened-svd/manifest.json",
            "--probes",
            "probes.pft",
            "--out",
            "cmp.json",
        ],
        cwd,
    );
    assert!(cmp["rel_frobenius"].as_f64().unwrap() < 1e-6, "{cmp}");
}

#[test]
fn compress_rejects_lambda_out_of_range() {
    let (_dir, cwd) = bundle();
    let out = pifa(
        &[
            "compress",
            "--model",
            "b/manifest.json",
            "--calib",
            "b/calib.pft",
            "--lambda",
            "1.5",
            "--out",
            "c",
        ],
        &cwd,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
}

#[test]
fn compress_infeasible_density_is_validation_error() {
    let (_dir, cwd) = bundle();
    let out = pifa(
        &[
            "compress",
            "--model",
            "b/manifest.json",
            "--calib",
            "b/calib.pft",
            "--density",
            "0.001",
            "--out",
            "c",
        ],
        &cwd,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_values_yield_to_flags() {
    let (_dir, cwd) = bundle();
    std::fs::write(
        cwd.join("cfg.json"),
        r#"{"model": "b/manifest.json", "calib": "b/calib.pft", "density": 0.9, "mode": "w+m"}"#,
    )
    .unwrap();
    let from_file = ok(&["compress", "--config", "cfg.json", "--out", "c1"], &cwd);
    let overridden = ok(
        &["compress", "--config", "cfg.json", "--density", "0.5", "--out", "c2"],
        &cwd,
    );
    assert_eq!(from_file["budget"]["global_density"], 0.9);
    assert_eq!(overridden["budget"]["global_density"], 0.5);
    assert_eq!(overridden["layers"][0]["method"], "w+m");
    let run = read_json(cwd.join("c2/run.json"));
    assert_eq!(run["config"]["density"], 0.5);
    assert_eq!(run["config"]["mode"], "w+m");
}

#[test]
fn eval_self_comparison_is_zero() {
    let (_dir, cwd) = bundle();
    ok(
        &[
            "eval",
            "--a",
            "b/manifest.json",
            "--b",
            "b/manifest.json",
            "--probes",
            "b/probes.pft",
            "--out",
            "self.json",
        ],
        &cwd,
    );
    let report = read_json(cwd.join("self.json"));
    assert_eq!(report["mse"], 0.0);
    assert_eq!(report["rel_frobenius"], 0.0);
    assert!(cwd.join("self.json.run.json").exists());
}

#[test]
fn eval_missing_probes_is_io_error() {
    let (_dir, cwd) = bundle();
    let out = pifa(
        &[
            "eval",
            "--a",
            "b/manifest.json",
            "--b",
            "b/manifest.json",
            "--probes",
            "absent.pft",
            "--out",
            "r.json",
        ],
        &cwd,
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.pft"));
}

#[test]
fn eval_error_grows_as_density_falls() {
    let (_dir, cwd) = bundle();
    let mut errors = Vec::new();
    for density in ["0.9", "0.7", "0.5", "0.3"] {
        let out = format!("c{density}");
        ok(
            &[
                "compress",
                "--model",
                "b/manifest.json",
                "--calib",
                "b/calib.pft",
                "--density",
                density,
                "--out",
                &out,
            ],
            &cwd,
        );
        let report = ok(
            &[
                "eval",
                "--a",
                "b/manifest.json",
                "--b",
                &format!("{out}/manifest.json"),
                "--probes",
                "b/probes.pft",
                "--out",
                "r.json",
            ],
            &cwd,
        );
        errors.push(report["mse"].as_f64().unwrap());
    }
    assert!(errors.windows(2).all(|w| w[0] <= w[1]), "{errors:?}");
}

#[test]
fn bench_zero_trials_is_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = pifa(
        &["bench", "--dims", "32", "--trials", "0", "--out", "b.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("b.csv").exists());
}

#[test]
fn bench_writes_fixed_schema() {
    let dir = TempDir::new().unwrap();
    let cwd = dir.path();
    ok(
        &[
            "bench",
            "--dims",
            "48,32x40",
            "--densities",
            "0.5,1.0",
            "--batch",
            "8",
            "--trials",
            "2",
            "--out",
            "b.csv",
        ],
        cwd,
    );
    let text = std::fs::read_to_string(cwd.join("b.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, pifa_core::bench::BENCH_CSV_COLUMNS.join(","),);
    assert!(text.lines().count() > 4);
    assert!(cwd.join("b.json").exists());
    assert!(cwd.join("b.csv.run.json").exists());
}

#[test]
fn sweep_lambda_emits_csv() {
    let (_dir, cwd) = bundle();
    ok(
        &[
            "sweep",
            "lambda",
            "--model",
            "b/manifest.json",
            "--calib",
            "b/calib.pft",
            "--probes",
            "b/probes.pft",
            "--lambdas",
            "0,0.25,1",
            "--out",
            "lambda.csv",
        ],
        &cwd,
    );
    let text = std::fs::read_to_string(cwd.join("lambda.csv")).unwrap();
    assert!(text.starts_with("lambda,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn reconstruct_single_layer_lowers_objective() {
    let (_dir, cwd) = bundle();
    let report = ok(
        &[
            "reconstruct",
            "--weight",
            "b/layer0.pft",
            "--calib",
            "b/calib.pft",
            "--rank",
            "12",
            "--init",
            "svd",
            "--out",
            "r",
        ],
        &cwd,
    );
    let before = report["objective_before"].as_f64().unwrap();
    let after = report["objective_after"].as_f64().unwrap();
    assert!(after < before, "{report}");
    assert!(cwd.join("r/u.pft").exists() && cwd.join("r/vt.pft").exists());
}

#[test]
fn threads_flag_does_not_change_results() {
    let (_dir, cwd) = bundle();
    for (threads, out) in [("1", "t1"), ("3", "t3")] {
        ok(
            &[
                "--threads",
                threads,
                "compress",
                "--model",
                "b/manifest.json",
                "--calib",
                "b/calib.pft",
                "--out",
                out,
            ],
            &cwd,
        );
    }
    let cmp = ok(
        &[
            "eval",
            "--a",
            "t1/manifest.json",
            "--b",
            "t3/manifest.json",
            "--probes",
            "b/probes.pft",
            "--out",
            "r.json",
        ],
        &cwd,
    );
    assert!(cmp["rel_frobenius"].as_f64().unwrap() < 1e-12);
}
