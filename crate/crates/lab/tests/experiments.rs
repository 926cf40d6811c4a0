use livsic_lab::config::{Experiment, ExperimentConfig};
use livsic_lab::experiments::run;
use livsic_lab::report::render;
use livsic_lab::{exit_code, Pool};
use serde_json::Value;

fn config(e: Experiment, body: &str) -> ExperimentConfig {
    ExperimentConfig::parse(body).unwrap().resolve(e, Some(11), None).unwrap()
}

fn results(cfg: &ExperimentConfig, workers: usize) -> (Value, String) {
    let out = run(cfg, &Pool::new(workers, cfg.seed).unwrap()).unwrap();
    let text = render(cfg, &out).unwrap();
    (out.results, text)
}

const FAST: &str = r#""tolerances": { "exponent_n": 2000, "exponent_starts": 3, "p_max": 4, "repetitions": 200 }"#;

#[test]
fn sweep_separates_zero_from_positive_shear() {
    let cfg = config(Experiment::MainTheoremSweep, &format!(r#"{{ "params": {{ {FAST}, "solve": {{ "density": 0.05 }} }} }}"#));
    let out = run(&cfg, &Pool::new(2, cfg.seed).unwrap()).unwrap();
    let rows = out.results["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["verdict"], "coboundary");
    for r in &rows[1..] {
        assert_eq!(r["verdict"], "obstruction", "{r}");
        assert_eq!(r["marginal"], false);
    }
    assert_eq!(exit_code(Experiment::MainTheoremSweep, &out), 0);
    assert_eq!(out.traces[0].rows.len(), 6);
}

#[test]
fn sweep_rejects_other_families() {
    let cfg = config(Experiment::MainTheoremSweep, r#"{ "cocycle": { "family": "rotation", "amplitude": 0.1 } }"#);
    let err = run(&cfg, &Pool::new(1, 0).unwrap()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn shadow_modes_follow_the_cocycle() {
    let shear = config(Experiment::Shadow, r#"{ "cocycle": { "family": "shear", "a0": 0.5 }, "params": { "trials": 6 } }"#);
    let (r, _) = results(&shear, 2);
    for e in r["events"].as_array().unwrap() {
        assert_eq!(e["mode"], "hyperbolic");
        assert_eq!(e["base_closed"], true);
        assert!(e["fitted_rate"].as_f64().unwrap() >= e["kappa"].as_f64().unwrap() - 0.05);
    }
    let cob = config(
        Experiment::Shadow,
        r#"{ "cocycle": { "family": "coboundary", "transfer": { "kind": "shear", "amplitude": 0.4, "harmonic": [1, 1] } }, "params": { "trials": 4 } }"#,
    );
    let (r, _) = results(&cob, 1);
    for e in r["events"].as_array().unwrap() {
        assert_eq!(e["mode"], "neutral", "{e}");
    }
}

#[test]
fn spectrum_of_a_coboundary_vanishes() {
    let cfg = config(
        Experiment::Spectrum,
        r#"{ "cocycle": { "family": "coboundary", "transfer": { "kind": "shear", "amplitude": 0.3 } }, "params": { "n": 2000, "trials": 3, "checkpoints": 5 } }"#,
    );
    let out = run(&cfg, &Pool::new(1, cfg.seed).unwrap()).unwrap();
    assert!(out.results["max_abs_exponent"].as_f64().unwrap() <= 1e-2);
    assert_eq!(out.traces[0].rows.len(), 3 * 5);
}

#[test]
fn solve_and_classify_agree_on_a_coboundary() {
    let body = format!(
        r#"{{ "cocycle": {{ "family": "coboundary", "transfer": {{ "kind": "rotation", "amplitude": 0.2 }} }}, "params": {{ {FAST}, "solve": {{ "density": 0.05 }} }} }}"#
    );
    let (s, _) = results(&config(Experiment::Solve, &body), 2);
    assert!(s["residual_c0"].as_f64().unwrap() <= s["verify_tolerance"].as_f64().unwrap());
    let (c, _) = results(&config(Experiment::Classify, &body), 1);
    assert_eq!(c["verdict"], "coboundary");
}

#[test]
fn reports_echo_the_resolved_config() {
    let cfg = config(Experiment::PocCheck, r#"{ "cocycle": { "family": "shear", "a0": 0.5 }, "params": { "p_max": 2 } }"#);
    let (r, text) = results(&cfg, 1);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["config"]["params"]["solve"]["stride"], 64);
    assert_eq!(v["version"], livsic_lab::report::VERSION);
    assert_eq!(v["results"], r);
    let fixed = (r["periods"][0]["max_c0"].as_f64().unwrap() - 0.5 / std::f64::consts::TAU).abs();
    assert!(fixed < 1e-12);
}
