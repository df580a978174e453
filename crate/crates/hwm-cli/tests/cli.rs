use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hwm_core::scenarios;
use serde_json::{json, Value};
use tempfile::TempDir;

fn hwm() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hwm"));
    cmd.env_remove("HWM_THREADS");
    cmd
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = hwm();
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn assert_valid(schema: &str, doc: &Value) {
    let schema = read_json(&schema_dir().join(format!("{schema}.schema.json")));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn targets(w: &[f64], eps: f64) -> Value {
    json!({ "targets": { "w": w, "epsilon": eps } })
}

/// Constructs `w` into `dir` and returns the path of the written configuration.
fn construct(dir: &Path, w: &[f64]) -> PathBuf {
    let cfg = write_config(dir, "targets.json", &targets(w, 0.01));
    let o = run(&["construct"], Some(&cfg), dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join("configuration.json")
}

fn configuration_doc(cfg: &hwm_core::Configuration) -> Value {
    json!({
        "m0": cfg.m0,
        "spins": cfg.spins.iter().map(|s| s.0.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "poles": cfg.poles.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
    })
}

#[test]
fn construct_two_solitons() {
    let dir = TempDir::new().unwrap();
    let cfg = construct(dir.path(), &[-0.5, 0.5]);
    let config = read_json(&cfg);
    let report = read_json(&dir.path().join("build_report.json"));
    assert_valid("scenario_config", &config);
    assert_valid("build_report", &report);
    assert_eq!(config["configuration"]["poles"].as_array().unwrap().len(), 2);
    let hist: Vec<f64> = report["residual_history"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(hist.len() >= 2);
    assert!(hist.windows(2).all(|p| p[1] <= 0.5 * p[0]), "{hist:?}");
    assert!(report["final_residual"].as_f64().unwrap() <= 1e-12);
    for e in report["final_speed_errors"].as_array().unwrap() {
        assert!(e.as_f64().unwrap() <= 0.01);
    }
}

#[test]
fn construct_single_soliton_is_exact() {
    let dir = TempDir::new().unwrap();
    construct(dir.path(), &[0.3]);
    let report = read_json(&dir.path().join("build_report.json"));
    assert_valid("build_report", &report);
    assert!(report["final_residual"].as_f64().unwrap() <= 1e-15);
}

#[test]
fn unit_speed_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &targets(&[-0.5, 1.0], 0.01));
    let o = run(&["construct"], Some(&cfg), dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("SpeedUnit"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &json!({ "targets": { "w": [0.1], "epsilon": 0.01, "speed": 2 } }));
    assert_eq!(code(&run(&["construct"], Some(&cfg), dir.path())), 1);
    let cfg = write_config(dir.path(), "bad2.json", &json!({ "trajectroy": {} }));
    assert_eq!(code(&run(&["simulate"], Some(&cfg), dir.path())), 1);
}

#[test]
fn missing_config_file_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&["analyze"], Some(&dir.path().join("nope.json")), dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn free_soliton_moves_in_a_straight_line() {
    let dir = TempDir::new().unwrap();
    let cfg = construct(dir.path(), &[0.3]);
    let o = hwm().args(["simulate", "--t-end", "10"]).arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(text.contains("\r\n"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[..3], ["t", "x1_re", "x1_im"]);
    assert_eq!(header.last().unwrap(), "max_residual");
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 2);
    let (x0, y0) = (rows[0][1], rows[0][2]);
    for r in &rows {
        assert!((r[1] - (x0 + 0.3 * r[0])).abs() <= 1e-9, "{r:?}");
        assert!((r[2] - y0).abs() <= 1e-12);
    }
    let mon = read_json(&dir.path().join("monitor.json"));
    assert_valid("monitor", &mon);
    assert_eq!(mon["status"], "Completed");
}

#[test]
fn constructed_pair_conserves_momentum() {
    let dir = TempDir::new().unwrap();
    let cfg = construct(dir.path(), &[-0.4, 0.4]);
    let o = hwm().args(["simulate", "--t-end", "30"]).arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mon = read_json(&dir.path().join("monitor.json"));
    assert_valid("monitor", &mon);
    assert!(mon["velocity_sum_drift"].as_f64().unwrap() <= 1e-8);
    assert!(mon["max_constraint_residual"].as_f64().unwrap() <= 1e-8);
    assert!(mon["separation_rates"][0]["rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn collision_exits_with_event_and_keeps_output() {
    let dir = TempDir::new().unwrap();
    let cfg = construct(dir.path(), &[0.5, -0.5]);
    let mut doc = read_json(&cfg);
    // swap the poles so the pair approaches
    let poles = doc["configuration"]["poles"].as_array_mut().unwrap();
    poles.swap(0, 1);
    poles[0][0] = json!(-20.0);
    poles[1][0] = json!(20.0);
    doc["trajectory"] = json!({ "t_end": 100.0, "stride": 1.0, "collision_floor": 10.0 });
    let cfg = write_config(dir.path(), "collide.json", &doc);
    let o = run(&["simulate"], Some(&cfg), dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let mon = read_json(&dir.path().join("monitor.json"));
    assert_valid("monitor", &mon);
    assert_eq!(mon["status"], "PoleCollision");
    assert!(mon["t_reached"].as_f64().unwrap() < 100.0);
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn analyze_constructed_triple() {
    let dir = TempDir::new().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/analyze_n3.json");
    let o = run(&["analyze"], Some(&cfg), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = read_json(&dir.path().join("report.json"));
    assert_valid("report", &rep);
    assert!(rep["alpha"]["alpha"].as_f64().unwrap() > 0.0);
    assert!(rep["witness"].is_object());
    assert_eq!(rep["spectrum"]["singular"], false);
    let v: Vec<f64> = rep["asymptotics"]["v"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (got, want) in v.iter().zip([-0.6, 0.0, 0.6]) {
        assert!((got - want).abs() <= 0.01);
    }
    assert_eq!(rep["bounds"]["all_pass"], true);
    assert_eq!(rep["traveling"]["verdict"], "NotTraveling");
    assert!(rep["convergence"].as_array().unwrap().len() > 1);
}

#[test]
fn traveling_pair_has_singular_spectrum() {
    let dir = TempDir::new().unwrap();
    let cfg = scenarios::traveling_configuration(0.3, 0.5, 0.0);
    let path = write_config(dir.path(), "traveling.json", &json!({ "configuration": configuration_doc(&cfg) }));
    assert_valid("scenario_config", &read_json(&path));
    let o = run(&["analyze"], Some(&path), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = read_json(&dir.path().join("report.json"));
    assert_valid("report", &rep);
    assert_eq!(rep["spectrum"]["singular"], true);
    assert!(rep["asymptotics"].is_null());
    assert!(!rep["notes"].as_array().unwrap().is_empty());
    assert_eq!(rep["traveling"]["verdict"], "Traveling");
}

#[test]
fn verify_single_suites_pass() {
    let dir = TempDir::new().unwrap();
    let o = hwm().args(["verify", "pauli", "isospectral"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_valid("verify", &summary);
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["seeds"], 10);
    assert_eq!(summary, read_json(&dir.path().join("verify.json")));
    assert_eq!(summary["suites"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_all_suites_pass() {
    let dir = TempDir::new().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/verify_all.json");
    let o = hwm().args(["verify"]).arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = read_json(&dir.path().join("verify.json"));
    assert_valid("verify", &summary);
    assert_eq!(summary["suites"].as_array().unwrap().len(), 7);
}

#[test]
fn injected_fault_is_caught() {
    let dir = TempDir::new().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sign_flip.json");
    let o = hwm().args(["verify"]).arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("suite isospectral failed"), "{}", stderr(&o));
    let summary = read_json(&dir.path().join("verify.json"));
    assert_valid("verify", &summary);
    assert_eq!(summary["fault"], "spin-sign-flip");
    assert_eq!(summary["pass"], false);
}

#[test]
fn unknown_suite_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let o = hwm().args(["verify", "nonsense"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn outputs_are_deterministic() {
    let runs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/simulate_random.json");
    for (i, d) in runs.iter().enumerate() {
        let threads = if i == 0 { "1" } else { "4" };
        for cmd in ["simulate", "analyze"] {
            let o = hwm().env("HWM_THREADS", threads).arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(d.path()).output().unwrap();
            assert_eq!(code(&o), 0, "{}", stderr(&o));
        }
    }
    for f in ["trajectory.csv", "monitor.json", "report.json"] {
        let a = std::fs::read(runs[0].path().join(f)).unwrap();
        let b = std::fs::read(runs[1].path().join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
}

#[test]
fn seed_selects_random_configuration() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (p, seed) in [(&a, "1"), (&b, "2")] {
        let o = hwm().args(["simulate", "--t-end", "1", "--seed", seed]).arg("--out").arg(p).output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_ne!(std::fs::read(a.join("trajectory.csv")).unwrap(), std::fs::read(b.join("trajectory.csv")).unwrap());
}

#[test]
fn invalid_thread_count_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let o = hwm().env("HWM_THREADS", "zero").args(["verify", "pauli"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_are_input_errors() {
    assert_eq!(code(&hwm().arg("explode").output().unwrap()), 1);
    assert_eq!(code(&hwm().args(["simulate", "--t-end", "soon"]).output().unwrap()), 1);
    assert_eq!(code(&hwm().arg("--help").output().unwrap()), 0);
}

#[test]
fn unreachable_tolerance_is_no_convergence() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "tight.json",
        &json!({ "targets": { "w": [-0.5, 0.5], "epsilon": 0.01 }, "construct": { "tol": 1e-30, "max_iter": 2 } }),
    );
    assert_eq!(code(&run(&["construct"], Some(&cfg), dir.path())), 2);
}

#[test]
fn shipped_configs_match_the_schema() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        assert_valid("scenario_config", &read_json(&entry.unwrap().path()));
    }
    assert_valid("scenario_config", &read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sign_flip.json")));
}
