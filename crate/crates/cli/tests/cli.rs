use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn slfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slfs")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = slfs(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn select_on_voting_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = s(tmp.path());
    ok(&["select", "--data", &data("voting.csv"), "--class", "class", "--lambda", "1", "--max-depth", "2", "--nch", "15", "--out-dir", &out]);
    for f in ["selection.json", "j_trace.csv", "tbn.dot", "manifest.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let sel: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("selection.json")).unwrap()).unwrap();
    let selected: Vec<u64> = sel["selected"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(selected, vec![0, 2, 3, 4, 10, 11, 13]);
    let trace = fs::read_to_string(tmp.path().join("j_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 17);
    assert!(fs::read_to_string(tmp.path().join("tbn.dot")).unwrap().starts_with("digraph tbn {"));
}

#[test]
fn missing_data_is_a_usage_error() {
    let out = slfs(&["select", "--class", "y"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn zero_depth_is_rejected() {
    let out = slfs(&["select", "--data", &data("voting.csv"), "--max-depth", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_depth"));
}

#[test]
fn bad_flag_values_exit_2() {
    assert_eq!(slfs(&["benchmark", "--data", &data("voting.csv"), "--classifiers", "svm"]).status.code(), Some(2));
    assert_eq!(slfs(&["select", "--data", &data("voting.csv"), "--order", "random"]).status.code(), Some(2));
    assert_eq!(slfs(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = s(tmp.path());
    assert_eq!(slfs(&["select", "--data", "/no/such/file.csv", "--out-dir", &out]).status.code(), Some(3));
    assert_eq!(slfs(&["select", "--data", &data("voting.csv"), "--class", "nope", "--out-dir", &out]).status.code(), Some(3));
    let ragged = tmp.path().join("ragged.csv");
    fs::write(&ragged, "a,b,class\n1,2,x\n3,y\n").unwrap();
    assert_eq!(slfs(&["select", "--data", &s(&ragged), "--out-dir", &out]).status.code(), Some(3));
}

#[test]
fn train_predict_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let train_dir = s(&tmp.path().join("train"));
    let pred_dir = s(&tmp.path().join("pred"));
    ok(&["train", "--data", &data("breast_cancer.csv"), "--out-dir", &train_dir]);
    let model = s(&tmp.path().join("train/model.json"));
    let out = ok(&["predict", "--model", &model, "--data", &data("breast_cancer.csv"), "--out-dir", &pred_dir]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let nums: Vec<f64> = stdout
        .split(|c: char| !(c.is_ascii_digit() || c == '.'))
        .filter_map(|t| t.parse().ok())
        .filter(|v| *v <= 1.0)
        .collect();
    let (acc, prior) = (nums[0], nums[1]);
    assert!(acc >= prior, "{stdout}");

    let preds = fs::read_to_string(tmp.path().join("pred/predictions.csv")).unwrap();
    let mut lines = preds.lines();
    assert_eq!(lines.next().unwrap(), "row,label,p_2,p_4");
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let sum: f64 = cols[2..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() <= 1e-6, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 683);
}

#[test]
fn predict_with_wrong_columns_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let train_dir = s(&tmp.path().join("train"));
    ok(&["train", "--data", &data("breast_cancer.csv"), "--out-dir", &train_dir]);
    let model = s(&tmp.path().join("train/model.json"));
    let out_dir = s(&tmp.path().join("pred"));
    let out = slfs(&["predict", "--model", &model, "--data", &data("voting.csv"), "--out-dir", &out_dir]);
    assert_eq!(out.status.code(), Some(4));
    let no_class = tmp.path().join("no_class.csv");
    fs::write(&no_class, "clump_thickness,label\n1,2\n").unwrap();
    let out = slfs(&["predict", "--model", &model, "--data", &s(&no_class), "--out-dir", &out_dir]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn benchmark_shape_and_repeatability() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (s(&tmp.path().join("a")), s(&tmp.path().join("b")));
    ok(&["benchmark", "--data", &data("breast_cancer.csv"), "--seed", "3", "--jobs", "1", "--out-dir", &a]);
    ok(&["benchmark", "--data", &data("breast_cancer.csv"), "--seed", "3", "--jobs", "4", "--out-dir", &b]);
    let summary = fs::read_to_string(tmp.path().join("a/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 15);
    for f in ["report.csv", "report.json", "summary.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
    let report = fs::read_to_string(tmp.path().join("a/report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 15 * 10);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, format!(r#"{{"data": {:?}, "max_depth": 1, "nch": 3}}"#, data("voting.csv"))).unwrap();
    let out = s(&tmp.path().join("o"));
    ok(&["select", "--config", &s(&cfg), "--nch", "4", "--out-dir", &out]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["max_depth"], 1);
    assert_eq!(m["config"]["nch"], 4);
    let sel: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/selection.json")).unwrap()).unwrap();
    assert!(sel["selected"].as_array().unwrap().len() <= 4);

    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(slfs(&["select", "--config", &s(&cfg)]).status.code(), Some(2));
}

#[test]
fn inputs_are_not_modified_and_manifest_records_them() {
    let tmp = tempfile::tempdir().unwrap();
    let copy: PathBuf = tmp.path().join("bc.csv");
    fs::copy(data("breast_cancer.csv"), &copy).unwrap();
    let before = fs::read(&copy).unwrap();
    let out = s(&tmp.path().join("o"));
    ok(&["discretize", "--data", &s(&copy), "--out-dir", &out]);
    assert_eq!(fs::read(&copy).unwrap(), before);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["inputs"][0]["role"], "data");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["command"], "discretize");
    let cuts: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/cuts.json")).unwrap()).unwrap();
    assert_eq!(cuts.as_array().unwrap().len(), 9);
}

#[test]
fn replay_refuses_changed_input() {
    let tmp = tempfile::tempdir().unwrap();
    let copy = tmp.path().join("v.csv");
    fs::copy(data("voting.csv"), &copy).unwrap();
    let out = s(&tmp.path().join("o"));
    ok(&["select", "--data", &s(&copy), "--out-dir", &out]);
    let manifest = s(&tmp.path().join("o/manifest.json"));
    ok(&["replay", "--manifest", &manifest]);
    let mut text = fs::read_to_string(&copy).unwrap();
    let dup = text.lines().nth(1).unwrap().to_owned();
    text.push_str(&dup);
    text.push('\n');
    fs::write(&copy, text).unwrap();
    assert_eq!(slfs(&["replay", "--manifest", &manifest]).status.code(), Some(3));
}

#[test]
fn export_dot_from_model() {
    let tmp = tempfile::tempdir().unwrap();
    let train_dir = s(&tmp.path().join("t"));
    ok(&["train", "--data", &data("voting.csv"), "--out-dir", &train_dir]);
    let dot_dir = s(&tmp.path().join("d"));
    ok(&["export-dot", "--model", &s(&tmp.path().join("t/model.json")), "--out-dir", &dot_dir]);
    assert_eq!(
        fs::read(tmp.path().join("d/tbn.dot")).unwrap(),
        fs::read(tmp.path().join("t/tbn.dot")).unwrap()
    );
    assert_eq!(slfs(&["export-dot", "--out-dir", &dot_dir]).status.code(), Some(2));
}
