use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn stormfit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stormfit"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("spawn stormfit")
}

fn data_args() -> Vec<String> {
    vec!["--storms".into(), fixture("storms_hurdat2.txt"), "--buoys".into(), fixture("buoy_42001.txt")]
}

fn run_ok(cmd: &[&str], out: &Path) {
    let data = data_args();
    let mut args: Vec<&str> = cmd.to_vec();
    args.extend(data.iter().map(String::as_str));
    let o = stormfit(&args, out);
    assert!(o.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn fit_with_preset_writes_six_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["fit", "--preset", "buoy-6term"], dir.path());
    let model = json(dir.path().join("model.json"));
    assert_eq!(model["coefficients"].as_array().unwrap().len(), 6);
    assert_eq!(model["terms"][3], "p^2");
    let manifest = json(dir.path().join("manifest-fit.json"));
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["outputs"][0], "model.json");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn lag_scan_finds_planted_lag() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["lag-scan", "--dt-range", "1..10"], dir.path());
    let scan = json(dir.path().join("lag_scan.json"));
    assert_eq!(scan["best_lag"], 3);
    let curve = std::fs::read_to_string(dir.path().join("lag_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 11);
}

#[test]
fn pca_tables_have_all_terms() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["pca", "--factors", "4"], dir.path());
    let loadings = std::fs::read_to_string(dir.path().join("loadings.csv")).unwrap();
    let mut lines = loadings.lines();
    assert_eq!(lines.next().unwrap(), "term,F1,F2,F3,F4");
    assert_eq!(lines.count(), 27);
    for name in ["factor_summary.csv", "membership.csv", "manifest-pca.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn fitted_model_feeds_predict_and_conic() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["fit"], dir.path());
    let model = dir.path().join("model.json").display().to_string();
    run_ok(&["predict", "--model", &model], dir.path());
    let preds = std::fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert!(preds.starts_with("timestamp,storm_id,name,lat,lon,observed,lower,upper,status,selected"));
    assert!(preds.lines().count() > 200);
    run_ok(&["conic", "--model", &model, "--x", "a", "--y", "t"], dir.path());
    let conic = json(dir.path().join("conic.json"));
    assert_eq!(conic["kind"], "degenerate");
}

#[test]
fn ingest_writes_canonical_csv_that_reloads() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["ingest"], dir.path());
    let storms = dir.path().join("storms.csv").display().to_string();
    let buoys = dir.path().join("buoys.csv").display().to_string();
    let again = dir.path().join("again");
    let o = stormfit(&["fit", "--storms", &storms, "--buoys", &buoys], &again);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = tempfile::tempdir().unwrap();
    run_ok(&["fit"], first.path());
    assert_eq!(
        json(again.join("model.json"))["coefficients"],
        json(first.path().join("model.json"))["coefficients"]
    );
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = stormfit(&["stats", "--storms", "/nonexistent/storms.txt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("stormfit: "));
}

#[test]
fn unknown_term_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_args();
    let mut args = vec!["fit", "--terms", "W,Z"];
    args.extend(data.iter().map(String::as_str));
    assert_eq!(stormfit(&args, dir.path()).status.code(), Some(2));
}

#[test]
fn empty_join_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_args();
    let mut args = vec!["fit", "--dt", "400"];
    args.extend(data.iter().map(String::as_str));
    let o = stormfit(&args, dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("model.json").exists());
}

#[test]
fn output_dir_is_created() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a/b/c");
    let o = stormfit(&["stats", "--storms", &fixture("storms_hurdat2.txt")], &nested);
    assert!(o.status.success());
    assert!(nested.join("categories.csv").exists());
    assert!(nested.join("manifest-stats.json").exists());
}
