use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qdec::dem::parse_dem;

fn qdec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdec")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = qdec(args);
    assert!(
        out.status.success(),
        "qdec {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn repetition_setup(dir: &Path) -> (String, String, String) {
    let dem = p(dir, "rep.dem");
    ok(&[
        "gen-dem",
        "--family",
        "repetition",
        "--distance",
        "3",
        "--rounds",
        "1",
        "--p",
        "0.05",
        "--out",
        &dem,
    ]);
    let train = p(dir, "train.01");
    let test = p(dir, "test.01");
    ok(&[
        "sample",
        "--dem",
        &dem,
        "--shots",
        "800",
        "--seed",
        "3",
        "--out",
        &train,
        "--split",
        "0.5",
        "--test-out",
        &test,
    ]);
    (dem, train, test)
}

#[test]
fn gen_dem_repetition_detector_count() {
    let text = ok(&[
        "gen-dem",
        "--family",
        "repetition",
        "--distance",
        "3",
        "--rounds",
        "1",
        "--p",
        "0.1",
    ]);
    let model = parse_dem(&text).unwrap();
    assert_eq!(model.num_detectors(), 4);
    assert_eq!(model.num_observables(), 1);
}

#[test]
fn gen_dem_surface_code_capacity() {
    let text = ok(&[
        "gen-dem",
        "--family",
        "rotated-surface",
        "--distance",
        "3",
        "--noise",
        "code-capacity",
        "--p",
        "0.01",
    ]);
    let model = parse_dem(&text).unwrap();
    assert_eq!((model.num_detectors(), model.num_observables()), (8, 2));
}

#[test]
fn missing_probability_is_usage_error() {
    let out = qdec(&["gen-dem", "--family", "repetition", "--distance", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_spec_exits_nonzero() {
    let out = qdec(&["gen-dem", "--family", "repetition", "--distance", "4", "--p", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sample_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (dem, _, _) = repetition_setup(dir.path());
    let out = qdec(&[
        "sample",
        "--dem",
        &dem,
        "--shots",
        "10",
        "--out",
        &p(dir.path(), "x.01"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fingerprint_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, test) = repetition_setup(dir.path());
    let other = p(dir.path(), "other.dem");
    ok(&[
        "gen-dem",
        "--family",
        "repetition",
        "--distance",
        "3",
        "--rounds",
        "1",
        "--p",
        "0.06",
        "--out",
        &other,
    ]);
    let out = qdec(&["mwpm", "--dem", &other, "--shots", &test]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_or_malformed_files_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let (dem, _, _) = repetition_setup(dir.path());
    let out = qdec(&["mwpm", "--dem", &dem, "--shots", &p(dir.path(), "absent.01")]);
    assert_eq!(out.status.code(), Some(4));
    let bad = p(dir.path(), "bad.dem");
    fs::write(&bad, "error(0.7) D0\n").unwrap();
    let out = qdec(&[
        "sample",
        "--dem",
        &bad,
        "--shots",
        "5",
        "--seed",
        "1",
        "--out",
        &p(dir.path(), "o.01"),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn baselines_report_rates_and_write_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (dem, _, test) = repetition_setup(dir.path());
    let preds = p(dir.path(), "mwpm.01");
    let stdout = ok(&["mwpm", "--dem", &dem, "--shots", &test, "--out", &preds]);
    assert!(stdout.contains("mwpm logical error rate"), "{stdout}");
    let header = fs::read_to_string(&preds).unwrap();
    assert!(header.starts_with("#dem-fingerprint "));
    assert_eq!(header.lines().count(), 401);
    let summary = p(dir.path(), "mld.json");
    ok(&["mld", "--dem", &dem, "--shots", &test, "--summary", &summary]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["shots"], 400);
    assert!(Path::new(&format!("{summary}.manifest.json")).exists());
}

#[test]
fn train_eval_decode_selfcorrect_round() {
    let dir = tempfile::tempdir().unwrap();
    let dem = p(dir.path(), "cc.dem");
    ok(&[
        "gen-dem",
        "--family",
        "repetition",
        "--distance",
        "3",
        "--noise",
        "code-capacity",
        "--p",
        "0.05",
        "--out",
        &dem,
    ]);
    let train = p(dir.path(), "train.01");
    let test = p(dir.path(), "test.01");
    ok(&[
        "sample",
        "--dem",
        &dem,
        "--shots",
        "1000",
        "--seed",
        "8",
        "--out",
        &train,
        "--split",
        "0.5",
        "--test-out",
        &test,
    ]);
    let out_dir = dir.path().join("run");
    let stdout = ok(&[
        "train",
        "--dem",
        &dem,
        "--train",
        &train,
        "--test",
        &test,
        "--qubits",
        "2",
        "--blocks",
        "2",
        "--readout",
        "1",
        "--epochs",
        "5",
        "--batch-size",
        "50",
        "--seed",
        "1",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(stdout.contains("best test LER"));
    for file in ["trace.csv", "best.ckpt", "final.ckpt", "summary.json", "manifest.json"] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("epoch,train_loss,train_ler,test_ler,seconds"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seeds"]["train"], 1);
    assert_eq!(manifest["options"]["qubits"], 2);
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 3);

    let ckpt = out_dir.join("best.ckpt");
    let ckpt = ckpt.to_str().unwrap();
    let stdout = ok(&["eval", "--checkpoint", ckpt, "--shots", &test, "--dem", &dem]);
    assert!(stdout.contains("95% CI"), "{stdout}");

    let preds = p(dir.path(), "pred.01");
    ok(&[
        "decode",
        "--checkpoint",
        ckpt,
        "--shots",
        &test,
        "--out",
        &preds,
        "--mode",
        "sample",
        "--seed",
        "4",
    ]);
    assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 501);
    let out = qdec(&[
        "decode",
        "--checkpoint",
        ckpt,
        "--shots",
        &test,
        "--out",
        &preds,
        "--mode",
        "sample",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let table = p(dir.path(), "table.csv");
    let summary = p(dir.path(), "sc.json");
    ok(&[
        "selfcorrect",
        "--checkpoint",
        ckpt,
        "--p",
        "0.05",
        "--shots",
        "500",
        "--seed",
        "2",
        "--table",
        &table,
        "--summary",
        &summary,
    ]);
    let table = fs::read_to_string(&table).unwrap();
    assert_eq!(
        table.lines().next(),
        Some("pattern,coherent_prob,classical_prob,abs_diff")
    );
    assert_eq!(table.lines().count(), 9);
}

#[test]
fn config_file_supplies_defaults_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let (dem, _, _) = repetition_setup(dir.path());
    let conf = p(dir.path(), "sample.conf");
    fs::write(&conf, "shots = 25\nseed = 4\n").unwrap();
    let out: PathBuf = dir.path().join("c.01");
    ok(&[
        "sample",
        "--config",
        &conf,
        "--dem",
        &dem,
        "--shots",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 31);
    assert!(text.lines().next().unwrap().ends_with("seed 4"));
}

#[test]
fn workers_flag_does_not_change_samples() {
    let dir = tempfile::tempdir().unwrap();
    let (dem, _, _) = repetition_setup(dir.path());
    let a = p(dir.path(), "a.01");
    let b = p(dir.path(), "b.01");
    ok(&[
        "sample",
        "--dem",
        &dem,
        "--shots",
        "9000",
        "--seed",
        "5",
        "--out",
        &a,
        "--workers",
        "1",
    ]);
    ok(&[
        "sample",
        "--dem",
        &dem,
        "--shots",
        "9000",
        "--seed",
        "5",
        "--out",
        &b,
        "--workers",
        "3",
    ]);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}
