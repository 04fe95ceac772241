use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_bns");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn bns(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("BNS_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_bars_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bns(&[
        "pipeline",
        "--bars",
        "no/such/bars.csv",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/bars.csv"));
}

#[test]
fn config_errors_have_their_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "sede = 1\n").unwrap();
    let out = bns(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(code(&out), 2);

    let out = bns(&["ingest", "--out", s(&dir.path().join("o2"))]);
    assert_eq!(code(&out), 2, "no bars configured");

    let out = bns(&[
        "simulate",
        "--theta",
        "1.5",
        "--out",
        s(&dir.path().join("o3")),
    ]);
    assert_eq!(code(&out), 2, "theta outside [0, 1]");
}

#[test]
fn unknown_hyperparameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let label = dir.path().join("label");
    let bars = fixture("synthetic_bars.csv");
    assert_eq!(
        code(&bns(&["label", "--bars", s(&bars), "--out", s(&label)])),
        0
    );
    let out = bns(&[
        "train",
        "--dataset",
        s(&label.join("dataset.csv")),
        "--algorithms",
        "knn",
        "--hp",
        "knn.neighbours=3",
        "--out",
        s(&dir.path().join("train")),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn jump_free_path_satisfies_the_variance_floor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    std::fs::write(
        &cfg,
        "[model.base]\nintensity = 0.0\njump_rate = 1.0\n[model.strong]\nintensity = 0.0\njump_rate = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        code(&bns(&[
            "simulate",
            "--config",
            s(&cfg),
            "--n-paths",
            "1",
            "--out",
            s(&out)
        ])),
        0
    );
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["variance_floor"]["satisfied"], true);
    assert_eq!(summary["jump_driven"]["mean_driving_jumps"], 0.0);
    assert!(out.join("paths/path_00000.csv").exists());
    assert!(out.join("config.toml").exists());
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let args = [
            "simulate",
            "--n-paths",
            "40",
            "--noise-std",
            "0.001",
            "--threads",
            threads,
            "--out",
            s(&out),
        ];
        assert_eq!(code(&bns(&args)), 0);
        tree(&out)
    };
    let a = run("a", "1");
    assert_eq!(a.len(), 40 + 3);
    assert_eq!(a, run("b", "3"));
}

#[test]
fn theta_changes_only_jump_driven_fields() {
    let dir = tempfile::tempdir().unwrap();
    let run = |theta: &str| {
        let out = dir.path().join(format!("theta{theta}"));
        let args = [
            "simulate",
            "--n-paths",
            "10000",
            "--n-steps",
            "50",
            "--path-files",
            "0",
            "--theta",
            theta,
            "--out",
            s(&out),
        ];
        assert_eq!(code(&bns(&args)), 0);
        json(&out.join("summary.json"))
    };
    let (a, b) = (run("0"), run("1"));
    assert_eq!(a["base_driver"], b["base_driver"]);
    assert_eq!(a["strong_driver"], b["strong_driver"]);
    assert_eq!(a["variance_floor"]["satisfied"], true);
    assert_eq!(b["variance_floor"]["satisfied"], true);
    for key in [
        "mean_driving_terminal",
        "mean_driving_jumps",
        "mean_terminal_variance",
        "mean_integrated_variance",
    ] {
        assert_ne!(a["jump_driven"][key], b["jump_driven"][key], "{key}");
    }
    // the strong driver has four times the base intensity
    let jumps = |v: &Value| v["jump_driven"]["mean_driving_jumps"].as_f64().unwrap();
    assert!(jumps(&b) > 3.0 * jumps(&a));
    for v in [&a, &b] {
        for d in ["base_driver", "strong_driver"] {
            assert!(
                v[d]["mean_z_score"].as_f64().unwrap().abs() < 4.0,
                "{d}: {}",
                v[d]
            );
        }
    }
}

#[test]
fn label_train_report_chain() {
    let dir = tempfile::tempdir().unwrap();
    let label = dir.path().join("label");
    let bars = fixture("synthetic_bars.csv");
    assert_eq!(
        code(&bns(&["label", "--bars", s(&bars), "--out", s(&label)])),
        0
    );
    let summary = json(&label.join("label_summary.json"));
    assert!(summary["rows"].as_u64().unwrap() > 1000);

    let common = |cmd: &str, out: &Path| {
        let o = bns(&[
            cmd,
            "--dataset",
            s(&label.join("dataset.csv")),
            "--returns",
            s(&label.join("returns.csv")),
            "--splits",
            s(&fixture("splits.toml")),
            "--algorithms",
            "A,decision_tree,naive_bayes_gaussian",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let train = dir.path().join("train");
    common("train", &train);
    assert!(train.join("models/T4_decision_tree.json").exists());
    let model = json(&train.join("models/T1_logistic_regression.json"));
    assert_eq!(model["algorithm"], "logistic_regression");

    let report = dir.path().join("report");
    let stdout = String::from_utf8(common("report", &report).stdout).unwrap();
    for t in ["T1", "T2", "T3", "T4"] {
        assert!(stdout.contains(&format!("{t}  (train rows")), "{stdout}");
        assert!(report.join(format!("report_{t}.csv")).exists());
    }
}

#[test]
fn external_predictions_join_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let label = dir.path().join("label");
    let bars = fixture("synthetic_bars.csv");
    assert_eq!(
        code(&bns(&["label", "--bars", s(&bars), "--out", s(&label)])),
        0
    );
    let dataset = std::fs::read_to_string(label.join("dataset.csv")).unwrap();
    let mut preds = String::from("index,predicted_theta\n");
    for line in dataset.lines().skip(1) {
        let idx = line.split(',').next().unwrap();
        preds.push_str(&format!("{idx},1\n"));
    }
    let ext = dir.path().join("ones.csv");
    std::fs::write(&ext, preds).unwrap();
    let report = dir.path().join("report");
    let o = bns(&[
        "report",
        "--dataset",
        s(&label.join("dataset.csv")),
        "--algorithms",
        "knn",
        "--external",
        &format!("all_ones={}", s(&ext)),
        "--out",
        s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&report.join("report.json"));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["algorithm"], "all_ones");
    assert_eq!(rows[1]["report"]["classes"][1]["recall"], 1.0);
    assert_eq!(
        rows[0]["report"]["classes"][1]["support"],
        rows[1]["report"]["classes"][1]["support"]
    );
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let bars = fixture("synthetic_bars.csv");
    let o = bns(&[
        "pipeline",
        "--config",
        s(&fixture("pipeline.toml")),
        "--bars",
        s(&bars),
        "--algorithms",
        "naive_bayes_gaussian,decision_tree",
        "--train",
        "0:2999",
        "--test",
        "3000:4559",
        "--out",
        s(&first),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let assertions = json(&first.join("assertions.json"));
    assert!(
        assertions
            .as_array()
            .unwrap()
            .iter()
            .all(|a| a["passed"] == true),
        "{assertions}"
    );

    let second = dir.path().join("second");
    let o = bns(&[
        "pipeline",
        "--config",
        s(&first.join("config.toml")),
        "--out",
        s(&second),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(tree(&first), tree(&second));
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["simulate", "--n-steps", "10"])
        .env("BNS_OUTPUT_ROOT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("simulate/summary.json").exists());
}
