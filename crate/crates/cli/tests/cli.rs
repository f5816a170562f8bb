use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn parnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let idx = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["fit", "--help"], &["--version"]] {
        let out = parnet(dir.path(), args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["frobnicate"][..],
        &["fit"],
        &["fit", "--input", "d.csv", "--adaptive", "--fixed-steps", "3"],
        &["experiment", "table9"],
        &["experiment", "table1", "--reps", "0"],
        &["--jobs", "0", "generate"],
        &["fit", "--input", "d.csv", "--k", "0", "--fixed-steps", "3"],
    ] {
        assert_eq!(code(&parnet(dir.path(), args)), 1, "{args:?}");
    }
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "x1,y\n0.1,oops\n").unwrap();
    fs::write(dir.path().join("header.csv"), "a,b\n0.1,0.2\n").unwrap();
    for file in ["bad.csv", "header.csv", "missing.csv"] {
        let out = parnet(dir.path(), &["fit", "--input", file, "--k", "2", "--fixed-steps", "2"]);
        assert_eq!(code(&out), 2, "{file}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn generate_fit_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&parnet(p, &["generate", "--n", "80", "--seed", "4", "--out", "data.csv"])), 0);
    let out = parnet(p, &["fit", "--input", "data.csv", "--k", "40", "--fixed-steps", "20", "--synthetic-l2", "--out", "fit"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.json", "predictions.csv", "manifest.json"] {
        assert!(p.join("fit").join(f).is_file(), "{f}");
    }
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("fit/model.json")).unwrap()).unwrap();
    assert_eq!(model["architecture"]["blocks"], 40);
    assert_eq!(model["weights"].as_array().unwrap().len(), 40 * 170);
    assert!(model["training"]["synthetic_l2_error"].as_f64().unwrap() > 0.0);

    let out = parnet(p, &["predict", "--model", "fit/model.json", "--input", "data.csv", "--out", "pred.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fitted = column(&p.join("fit/predictions.csv"), "prediction");
    let predicted = column(&p.join("pred.csv"), "prediction");
    assert_eq!(fitted.len(), 80);
    assert_eq!(fitted, predicted);
    let beta = 10.0 * 80f64.ln();
    assert!(predicted.iter().all(|v| v.abs() <= beta));
}

#[test]
fn zero_responses_give_the_zero_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let rows: String = (0..30).map(|i| format!("{},0\n", -1.0 + i as f64 / 15.0)).collect();
    fs::write(p.join("zeros.csv"), format!("x1,y\n{rows}")).unwrap();
    let out = parnet(p, &["fit", "--input", "zeros.csv", "--k", "10", "--fixed-steps", "25", "--out", "fit"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(column(&p.join("fit/predictions.csv"), "prediction").iter().all(|&v| v == 0.0));
}

#[test]
fn adaptive_fit_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&parnet(p, &["generate", "--n", "40", "--out", "data.csv"])), 0);
    let out = parnet(p, &["fit", "--input", "data.csv", "--k", "8", "--adaptive", "--trace", "--out", "fit"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(p.join("fit/trace.csv")).unwrap();
    assert!(trace.starts_with("i,t,risk,grad_norm_sq,dist_from_init\n"));
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("fit/model.json")).unwrap()).unwrap();
    let reason = model["training"]["stop_reason"].as_str().unwrap();
    assert!(["conditions_met", "fallback_cap"].contains(&reason), "{reason}");
}
