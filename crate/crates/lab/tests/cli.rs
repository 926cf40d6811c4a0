use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_livsic-lab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], workers: &str) -> i32 {
    let out = bin().args(args).env("LIVSIC_LAB_WORKERS", workers).output().unwrap();
    out.status.code().unwrap()
}

const LEMMAS: &str = r#"{ "params": { "trials": 20, "lemma": { "cone_samples": 200 } } }"#;

#[test]
fn lemma_tests_seed_7_twice_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "l.json", LEMMAS);
    let mut reports = vec![];
    for (tag, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = dir.path().join(tag);
        let code = run(&["lemma-tests", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()], workers);
        assert_eq!(code, 0);
        let mut files = vec![std::fs::read(out.join("report.json")).unwrap()];
        for s in ["conjugacy", "cones", "gap", "localization"] {
            files.push(std::fs::read(out.join(format!("lemma_{s}.csv"))).unwrap());
        }
        assert!(out.join("timing.json").exists());
        reports.push(files);
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
    let text = String::from_utf8(reports[0][0].clone()).unwrap();
    assert!(text.contains("\"seed\": 7"));
    assert!(!text.contains("wall_time"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();

    let bad = write_config(dir.path(), "bad.json", r#"{ "params": { "trails": 3 } }"#);
    assert_eq!(run(&["lemma-tests", "--config", bad.to_str().unwrap(), "--out", o], "1"), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["solve", "--config", missing.to_str().unwrap(), "--out", o], "1"), 2);
    let no_cocycle = write_config(dir.path(), "none.json", "{}");
    assert_eq!(run(&["solve", "--config", no_cocycle.to_str().unwrap(), "--out", o], "1"), 2);
    assert_eq!(run(&["lemma-tests", "--config", no_cocycle.to_str().unwrap(), "--out", o], "zero"), 2);
    assert_eq!(run(&["no-such-experiment", "--config", no_cocycle.to_str().unwrap()], "1"), 2);

    // the periodic orbit condition fails, so there is nothing to solve
    let shear = write_config(dir.path(), "shear.json", r#"{ "cocycle": { "family": "shear", "a0": 0.5 } }"#);
    assert_eq!(run(&["solve", "--config", shear.to_str().unwrap(), "--out", o], "1"), 3);

    // a slope tolerance no estimate can meet
    let strict = write_config(
        dir.path(),
        "strict.json",
        r#"{ "params": { "lemma": { "suites": ["localization"], "slope_tol": 1e-9 } } }"#,
    );
    assert_eq!(run(&["lemma-tests", "--config", strict.to_str().unwrap(), "--out", o], "1"), 4);
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"ok\": false"));
}

#[test]
fn poc_check_on_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "id.json",
        r#"{ "cocycle": { "family": "constant", "diffeo": { "kind": "rotation", "params": { "v": [0.0, 0.0] } }, "dim": 2 } }"#,
    );
    let out = dir.path().join("poc");
    let o = bin()
        .args(["poc-check", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("all residuals ≤ 1e-12"));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["verdicts"][0]["verdict"], "all residuals ≤ 1e-12");
    assert_eq!(r["results"]["max_residual"], 0.0);
    let csv = std::fs::read_to_string(out.join("orbits.csv")).unwrap();
    assert!(csv.starts_with("period,index,x0,x1,c0,c1\n"));
}

#[test]
fn config_must_match_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{ "experiment": "spectrum", "cocycle": { "family": "shear", "a0": 0.1 } }"#);
    assert_eq!(run(&["classify", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], "1"), 2);
}
