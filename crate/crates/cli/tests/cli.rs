use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gami(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gami")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, model: &str, kind: &str, n: usize, seed: u64) -> Output {
    gami(&["simulate", "--model", model, "--n", &n.to_string(), "--sigma", "2", "--kind", kind, "--seed", &seed.to_string(), "--out", p(dir)])
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

/// A one-combination grid keeps the fits quick.
fn small_grid(dir: &Path) -> String {
    let path = dir.join("grid.json");
    fs::write(
        &path,
        r#"{"n_trees":[300],"max_depth":[2],"learning_rate":[0.1],"reg_lambda":[1.0],"min_child_hessian":[1.0],"early_stopping_rounds":20}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

fn fit(data: &Path, out: &Path, k: &str, monotone: &str, grid: &str) -> Output {
    gami(&[
        "fit",
        "--train",
        p(&data.join("train.csv")),
        "--valid",
        p(&data.join("valid.csv")),
        "--test",
        p(&data.join("test.csv")),
        "--k",
        k,
        "--monotone",
        monotone,
        "--out",
        p(out),
        "--grid",
        grid,
    ])
}

#[test]
fn simulate_writes_split_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(tmp.path(), "first", "continuous", 15_000, 1);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for (name, rows) in [("train.csv", 7500), ("valid.csv", 3750), ("test.csv", 3750)] {
        assert_eq!(line_count(&tmp.path().join(name)), rows + 1);
    }
    let header = fs::read_to_string(tmp.path().join("train.csv")).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header, "x1,x2,x3,x4,y");
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["rows"]["train"], 7500);

    let tiny = tmp.path().join("tiny");
    assert_eq!(code(&simulate(&tiny, "second", "binary", 4, 3)), 0);
    for (name, rows) in [("train.csv", 2), ("valid.csv", 1), ("test.csv", 1)] {
        assert_eq!(line_count(&tiny.join(name)), rows + 1);
    }
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, "second", "binary", 500, 7);
    simulate(&b, "second", "binary", 500, 7);
    for name in ["train.csv", "valid.csv", "test.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
}

#[test]
fn bad_usage_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gami(&["simulate", "--model", "first", "--n", "100", "--sigma", "-1", "--out", p(tmp.path())]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&gami(&["simulate", "--model", "third", "--n", "100", "--out", p(tmp.path())])), 2);
    assert_eq!(code(&gami(&["simulate", "--model", "first", "--n", "100", "--bogus", "--out", p(tmp.path())])), 2);

    let data = tmp.path().join("data");
    simulate(&data, "first", "continuous", 400, 2);
    let grid = small_grid(tmp.path());
    let out = fit(&data, &tmp.path().join("fit"), "7", "+,+,+,+", &grid);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("6 pairs"));
    assert_eq!(code(&fit(&data, &tmp.path().join("fit"), "1", "+,+", &grid)), 2);
    assert_eq!(code(&fit(&data, &tmp.path().join("fit"), "1", "+,+,up,0", &grid)), 2);
    let filter = gami(&[
        "filter",
        "--train",
        p(&data.join("train.csv")),
        "--valid",
        p(&data.join("valid.csv")),
        "--k",
        "7",
    ]);
    assert_eq!(code(&filter), 2);
}

#[test]
fn unreadable_inputs_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = small_grid(tmp.path());
    assert_eq!(code(&fit(&tmp.path().join("missing"), &tmp.path().join("fit"), "0", "+", &grid)), 3);

    let data = tmp.path().join("data");
    simulate(&data, "first", "continuous", 400, 2);
    fs::write(data.join("broken.csv"), "x1,x2,y\n1,2\n").unwrap();
    let out = gami(&["filter", "--train", p(&data.join("broken.csv")), "--valid", p(&data.join("valid.csv")), "--k", "1"]);
    assert_eq!(code(&out), 3);
    let out = gami(&["export-terms", "--model", p(&data.join("nope.json")), "--train", p(&data.join("train.csv")), "--out", p(tmp.path())]);
    assert_eq!(code(&out), 3);
    fs::write(tmp.path().join("bad_grid.json"), "{\"n_trees\": [").unwrap();
    assert_eq!(code(&fit(&data, &tmp.path().join("fit"), "0", "+,+,+,+", p(&tmp.path().join("bad_grid.json")))), 3);
}

#[test]
fn filter_ranks_the_true_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "second", "continuous", 6000, 4);
    let out = gami(&[
        "filter",
        "--train",
        p(&tmp.path().join("train.csv")),
        "--valid",
        p(&tmp.path().join("valid.csv")),
        "--k",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    let pairs: Vec<Value> = serde_json::from_str(&text).unwrap();
    let mut found: Vec<(u64, u64)> = pairs.iter().map(|v| (v["j"].as_u64().unwrap(), v["k"].as_u64().unwrap())).collect();
    found.sort();
    assert_eq!(found, vec![(0, 1), (2, 3)]);
    assert!(pairs[0]["score"].as_f64().unwrap() >= pairs[1]["score"].as_f64().unwrap());
}

#[test]
fn fit_verify_export_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "second", "binary", 3000, 5);
    let grid = small_grid(tmp.path());
    let (run_a, run_b) = (tmp.path().join("a"), tmp.path().join("b"));

    let out = fit(&data, &run_a, "2", "+,+,+,+", &grid);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(run["metrics"]["kind"], "auc");
    assert_eq!(run["selected_pairs"].as_array().unwrap().len(), 2);
    assert_eq!(run["files"]["model"], "model.json");
    for file in run["files"]["terms"].as_array().unwrap() {
        assert!(run_a.join(file.as_str().unwrap()).is_file());
    }
    let model_text = fs::read_to_string(run_a.join("model.json")).unwrap();
    assert_eq!(model_text.lines().count(), 1);
    let model: Value = serde_json::from_str(&model_text).unwrap();
    for key in ["base_score", "constraints", "learning_rate", "loss", "trees"] {
        assert!(model.get(key).is_some(), "model.json lacks {key}");
    }

    // rerun: identical model and manifest bytes
    assert_eq!(code(&fit(&data, &run_b, "2", "+,+,+,+", &grid)), 0);
    assert_eq!(fs::read(run_a.join("model.json")).unwrap(), fs::read(run_b.join("model.json")).unwrap());
    assert_eq!(fs::read(run_a.join("terms/terms.json")).unwrap(), fs::read(run_b.join("terms/terms.json")).unwrap());

    let train = data.join("train.csv");
    let verify = gami(&["verify", "--model", p(&run_a.join("model.json")), "--train", p(&train), "--lines", "200"]);
    assert_eq!(code(&verify), 0, "{}", String::from_utf8_lossy(&verify.stdout));
    let report: Value = serde_json::from_slice(&verify.stdout).unwrap();
    assert_eq!(report["monotone"]["model"]["n_violations"], 0);
    assert_eq!(report["passed"], true);

    let export_dir = tmp.path().join("export");
    let out = gami(&["export-terms", "--model", p(&run_a.join("model.json")), "--train", p(&train), "--out", p(&export_dir)]);
    assert_eq!(code(&out), 0);
    assert_eq!(line_count(&export_dir.join("main_x1.csv")), 202);
    assert_eq!(line_count(&export_dir.join("inter_x1_x2.csv")), 51 * 51 + 1);
    // exported from the saved model, the grids match the ones written by fit
    assert_eq!(fs::read(export_dir.join("inter_x3_x4.csv")).unwrap(), fs::read(run_a.join("terms/inter_x3_x4.csv")).unwrap());

    let text = gami(&["report", "--dir", p(&run_a)]);
    assert_eq!(code(&text), 0);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.starts_with("AUC: train"));
    assert!(text.contains("x1:x2") && text.contains("x3:x4"));
    let json = gami(&["report", "--dir", p(&run_a), "--json"]);
    let summary: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(summary["terms"].as_array().unwrap().len(), 6);
}

#[test]
fn verify_rejects_a_decreasing_edit_and_truncated_json() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "first", "continuous", 1000, 6);
    let grid = small_grid(tmp.path());
    let run = tmp.path().join("fit");
    assert_eq!(code(&fit(&data, &run, "0", "+,+,+,+", &grid)), 0);
    let train = data.join("train.csv");

    let mut model: Value = serde_json::from_str(&fs::read_to_string(run.join("model.json")).unwrap()).unwrap();
    let stump: Value = serde_json::from_str(
        r#"{"nodes":[{"feature":0,"threshold":0.0,"left":1,"right":2},{"leaf_value":1.0},{"leaf_value":-1.0}]}"#,
    )
    .unwrap();
    model["trees"].as_array_mut().unwrap().push(stump);
    let edited = tmp.path().join("edited.json");
    fs::write(&edited, serde_json::to_string(&model).unwrap()).unwrap();
    let out = gami(&["verify", "--model", p(&edited), "--train", p(&train), "--lines", "50"]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["failed"], serde_json::json!(["monotone"]));
    assert!(report["monotone"]["model"]["n_violations"].as_u64().unwrap() > 0);

    let text = fs::read_to_string(run.join("model.json")).unwrap();
    let truncated = tmp.path().join("truncated.json");
    fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&gami(&["verify", "--model", p(&truncated), "--train", p(&train)])), 3);
}
