use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heartrisk::bundle::ModelBundle;
use heartrisk::dataset::{header_line, synth_generate};
use heartrisk::pipeline::{Algorithm, FittedModel, TrainConfig};
use heartrisk::preprocess::{self, UnseenPolicy};
use heartrisk::rnn::RnnParams;
use tempfile::TempDir;

fn heartrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heartrisk")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(dir: &TempDir, n: usize, seed: u64) -> PathBuf {
    let path = dir.path().join("data.csv");
    std::fs::write(&path, synth_generate(n, 0.45, seed).unwrap().to_csv()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_error(o: &Output, code: &str, exit: i32) {
    assert_eq!(o.status.code(), Some(exit), "stderr: {}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("{code}: ")), "{err}");
}

#[test]
fn missing_data_file_is_an_io_error() {
    let o = heartrisk(&["train", "--algo", "xgb", "--data", "/no/such/heart.csv"]);
    assert_error(&o, "E_IO", 2);
}

#[test]
fn bad_flags_and_values_are_config_errors() {
    assert_error(&heartrisk(&["train", "--frobnicate"]), "E_CONFIG", 4);
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 60, 1);
    assert_error(&heartrisk(&["train", "--data", s(&data), "--algo", "svm"]), "E_CONFIG", 4);
    assert_error(&heartrisk(&["train", "--data", s(&data), "--threshold", "1.5"]), "E_CONFIG", 4);
    assert_error(&heartrisk(&["train", "--data", s(&data), "--test-fraction", "0"]), "E_CONFIG", 4);
    assert_error(&heartrisk(&["train", "--data", s(&data), "--param", "max_depth=0.5"]), "E_CONFIG", 4);
}

#[test]
fn schema_and_data_errors_have_their_own_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "Age,Sex\n40,M\n").unwrap();
    assert_error(&heartrisk(&["summarize", "--data", s(&bad)]), "E_SCHEMA", 3);

    let one_class = dir.path().join("one.csv");
    let mut csv = header_line(true);
    csv.push('\n');
    for i in 0..10 {
        csv.push_str(&format!("{},M,ASY,130,220,0,Normal,140,N,1.0,Flat,1\n", 40 + i));
    }
    std::fs::write(&one_class, csv).unwrap();
    assert_error(&heartrisk(&["train", "--data", s(&one_class)]), "E_DATA", 6);
}

#[test]
fn train_writes_bundle_and_prints_table() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 150, 2);
    let bundle = dir.path().join("m.json");
    let report = dir.path().join("r.csv");
    let o = heartrisk(&[
        "train", "--algo", "xgb", "--data", s(&data), "--seed", "42", "--out", s(&bundle), "--report-csv", s(&report),
        "--param", "n_rounds=30",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("XGBoost"));
    let b = ModelBundle::from_json(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    assert_eq!(b.algorithm, Algorithm::Xgb);
    assert_eq!(b.train_config.boost.n_rounds, 30);
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("algorithm,accuracy,precision,recall,f1"));
}

#[test]
fn training_twice_gives_identical_bundles_apart_from_timestamp() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 120, 3);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = heartrisk(&["train", "--algo", "rnn", "--data", s(&data), "--out", s(&out), "--param", "max_epochs=20"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let b = ModelBundle::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let curves = std::fs::read_to_string(out.with_extension("curves.csv")).unwrap();
        (b.to_json_without_timestamp(), curves, stdout(&o).lines().take(3).collect::<Vec<_>>().join("\n"))
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    assert!(a.1.starts_with("epoch,train_loss,val_loss\n"));
}

#[test]
fn evaluate_on_saved_test_split_reproduces_saved_metrics() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 150, 4);
    let parts = dir.path().join("parts");
    let bundle = dir.path().join("nb.json");
    assert!(heartrisk(&["preprocess", "--data", s(&data), "--out", s(&parts)]).status.success());
    assert!(heartrisk(&["train", "--algo", "nb", "--data", s(&data), "--out", s(&bundle)]).status.success());
    let saved = ModelBundle::from_json(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    let csv = dir.path().join("eval.csv");
    let o = heartrisk(&["evaluate", "--model", s(&bundle), "--data", s(&parts.join("test_raw.csv")), "--out", s(&csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = saved.metrics_at_save.unwrap();
    let line = std::fs::read_to_string(&csv).unwrap().lines().nth(1).unwrap().to_string();
    assert!(line.starts_with(&format!("NaiveBayes,{},", m.accuracy.unwrap())), "{line}");
}

fn zero_rnn_bundle(dir: &TempDir) -> PathBuf {
    let data = synth_generate(40, 0.5, 5).unwrap();
    let fp = preprocess::fit(&data, UnseenPolicy::Error).unwrap();
    let b = ModelBundle::new("2024-01-01T00:00:00Z", fp, FittedModel::Rnn(RnnParams::zeros(1, 16)), TrainConfig::new(Algorithm::Rnn, 42), None)
        .unwrap();
    let path = dir.path().join("zero.json");
    std::fs::write(&path, b.to_json()).unwrap();
    path
}

#[test]
fn zero_rnn_predicts_one_half_and_label_one() {
    let dir = TempDir::new().unwrap();
    let bundle = zero_rnn_bundle(&dir);
    let input = dir.path().join("in.csv");
    let mut csv = synth_generate(6, 0.5, 6).unwrap().to_csv();
    csv = csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect();
    std::fs::write(&input, csv).unwrap();
    let o = heartrisk(&["predict", "--model", s(&bundle), "--data", s(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("row_index,probability,label"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(*row, format!("{i},0.5,1"));
    }
}

#[test]
fn predict_edge_cases() {
    let dir = TempDir::new().unwrap();
    let bundle = zero_rnn_bundle(&dir);
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, header_line(false) + "\n").unwrap();
    let o = heartrisk(&["predict", "--model", s(&bundle), "--data", s(&empty)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "row_index,probability,label\n");

    let missing = dir.path().join("missing.csv");
    std::fs::write(&missing, "Age,Sex\n50,M\n").unwrap();
    assert_error(&heartrisk(&["predict", "--model", s(&bundle), "--data", s(&missing)]), "E_SCHEMA", 3);

    let unseen = dir.path().join("unseen.csv");
    std::fs::write(&unseen, header_line(false) + "\n50,M,XYZ,130,220,0,Normal,140,N,1.0,Flat\n").unwrap();
    assert_error(&heartrisk(&["predict", "--model", s(&bundle), "--data", s(&unseen)]), "E_SCHEMA", 3);

    let text = std::fs::read_to_string(&bundle).unwrap().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
    let future = dir.path().join("future.json");
    std::fs::write(&future, text).unwrap();
    assert_error(&heartrisk(&["predict", "--model", s(&future), "--data", s(&empty)]), "E_VERSION", 5);
}

#[test]
fn gridsearch_writes_every_fold_of_every_candidate() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 120, 7);
    let grid = dir.path().join("grid.toml");
    std::fs::write(&grid, "k = 3\n[params]\nmax_depth = [1, 2]\nn_rounds = [5, 20]\n").unwrap();
    let results = dir.path().join("res.csv");
    let o = heartrisk(&["gridsearch", "--algo", "gb", "--data", s(&data), "--grid", s(&grid), "--out", s(&results)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("best "));
    let csv = std::fs::read_to_string(&results).unwrap();
    assert_eq!(csv.lines().next(), Some("model_id,params,fold,accuracy,precision,recall,f1"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3);

    std::fs::write(&grid, "[params]\ndepth = [1, 2]\n").unwrap();
    let o = heartrisk(&["gridsearch", "--algo", "gb", "--data", s(&data), "--grid", s(&grid)]);
    assert_error(&o, "E_CONFIG", 4);
    assert!(stderr(&o).contains("depth"));
}

#[test]
fn compare_emits_four_rows_in_table_order() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 120, 8);
    let csv = dir.path().join("cmp.csv");
    let o = heartrisk(&["compare", "--data", s(&data), "--report-csv", s(&csv), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(names, ["RNN", "NaiveBayes", "GradientBoosting", "XGBoost"]);
    assert!(stdout(&o).contains("F1 is derived"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 80, 9);
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!("algo = \"gb\"\nseed = 7\nout = {:?}\n[params]\nn_rounds = 12\n", s(&out)),
    )
    .unwrap();
    let o = heartrisk(&["train", "--algo", "xgb", "--seed", "1", "--data", s(&data), "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b = ModelBundle::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((b.algorithm, b.train_config.seed, b.train_config.boost.n_rounds), (Algorithm::Gb, 7, 12));

    std::fs::write(&cfg, "colour = \"red\"\n").unwrap();
    assert_error(&heartrisk(&["train", "--data", s(&data), "--config", s(&cfg)]), "E_CONFIG", 4);
}

#[test]
fn summarize_and_curves() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir, 80, 10);
    let o = heartrisk(&["summarize", "--data", s(&data)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Cholesterol"));
    let curves = dir.path().join("c.csv");
    let o = heartrisk(&["curves", "--data", s(&data), "--out", s(&curves), "--param", "max_epochs=15"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&curves).unwrap();
    assert!(text.starts_with("epoch,train_loss,val_loss\n1,"));
    assert_error(&heartrisk(&["curves", "--data", s(&data), "--algo", "nb"]), "E_CONFIG", 4);
}
