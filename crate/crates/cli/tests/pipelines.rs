use std::path::Path;

use flockcert::{io, presets};
use flockcert_cli::{run, run_certify, run_simulate, set_path, sweep, Mode, RunConfig, SweepAxis, EXIT_FAIL, EXIT_PASS};

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn sweep_cfg(scenario: &str, param: &str, values: &[&str], out: &Path) -> RunConfig {
    RunConfig {
        axis: Some(SweepAxis { param: param.into(), values: values.iter().map(|v| v.to_string()).collect() }),
        ..RunConfig::new(Mode::Sweep, scenario, out)
    }
}

#[test]
fn flocked_velocity_diameter_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    run_simulate(&RunConfig::new(Mode::Simulate, "preset:flocked", dir.path())).unwrap();
    let (h, rows) = read_csv(&dir.path().join("diagnostics.csv"));
    let k = column(&h, "d_V");
    assert!(rows.len() > 100);
    assert!(rows.iter().all(|r| r[k] == 0.0));
}

#[test]
fn closed_form_velocity_diameter() {
    let dir = tempfile::tempdir().unwrap();
    run_simulate(&RunConfig::new(Mode::Simulate, "preset:closed-form-undelayed", dir.path())).unwrap();
    let (h, rows) = read_csv(&dir.path().join("diagnostics.csv"));
    let (t, k) = (column(&h, "t"), column(&h, "d_V"));
    let mut checked = 0;
    for r in rows.iter().filter(|r| r[t] >= 0.0) {
        let exact = 2.0 * (-2.0 * r[t]).exp();
        assert!((r[k] - exact).abs() <= 1e-6 * exact, "t = {}: {} vs {exact}", r[t], r[k]);
        checked += 1;
    }
    assert!(checked > 1000);
}

#[test]
fn trajectory_csv_starts_at_zero_and_ends_at_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { stride: Some(7), ..RunConfig::new(Mode::Simulate, "preset:default-delayed", dir.path()) };
    run_simulate(&cfg).unwrap();
    let (h, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(h.len(), 1 + 2 * 5 * 2);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows.last().unwrap()[0], 8.0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for mode in [Mode::Simulate, Mode::Certify] {
        for dir in [&a, &b] {
            let cfg = RunConfig { svg: true, ..RunConfig::new(mode, "preset:non-monotone-psi", dir.path()) };
            run(&cfg).unwrap();
        }
    }
    for name in ["trajectory.csv", "diagnostics.csv", "report.json", "dv_envelope.svg"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn default_preset_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_certify(&RunConfig::new(Mode::Certify, "preset:default-delayed", dir.path())).unwrap();
    assert_eq!(out.exit_code, EXIT_PASS);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["all_pass"], true);
    assert_eq!(doc["meta"]["fingerprint"], io::fingerprint(&presets::default_delayed()));
    assert_eq!(doc["checks"].as_array().unwrap().len(), 12);
}

#[test]
fn corrupted_fixture_fails_with_named_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { corrupt_exp: Some(1.0), ..RunConfig::new(Mode::Certify, "preset:default-delayed", dir.path()) };
    let out = run_certify(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_FAIL);
    for name in ["window_monotone", "lyapunov_nonincreasing", "velocity_decay"] {
        assert!(out.messages.iter().any(|m| m.starts_with(&format!("FAIL {name} "))), "{name} not reported");
    }
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn short_horizon_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { horizon: Some(1.0), ..RunConfig::new(Mode::Certify, "preset:flocked", dir.path()) };
    run_certify(&cfg).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["partial"], true);
}

#[test]
fn singleton_sweep_matches_certify() {
    let dir = tempfile::tempdir().unwrap();
    let result = sweep(&sweep_cfg("preset:default-delayed", "tau_bar", &["1.0"], dir.path())).unwrap();
    assert_eq!(result.rows.len(), 1);
    let row = &result.rows[0];
    run_certify(&RunConfig::new(Mode::Certify, "preset:default-delayed", dir.path())).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let c = &doc["constants"];
    assert_eq!(row.c, c["c"].as_f64().unwrap());
    assert_eq!(row.d_star, c["d_star"].as_f64().unwrap());
    assert_eq!(row.d0, c["d0"].as_f64().unwrap());
    assert_eq!(row.k, c["k"].as_f64().unwrap());
    assert_eq!(row.all_pass, doc["meta"]["all_pass"].as_bool().unwrap());
}

#[test]
fn delay_sweep_passes_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let result = sweep(&sweep_cfg("preset:default-delayed", "tau_bar", &["4", "0.1", "2", "0.5", "1"], dir.path())).unwrap();
    let values: Vec<&str> = result.rows.iter().map(|r| r.value.as_str()).collect();
    assert_eq!(values, ["0.1", "0.5", "1", "2", "4"]);
    for r in &result.rows {
        assert!(r.all_pass, "tau_bar = {} fails: {:?}", r.value, r.error);
        assert!(r.c > 0.0 && r.d_star.is_finite());
    }
}

#[test]
fn step_sweep_shows_fourth_order() {
    let dir = tempfile::tempdir().unwrap();
    let result = sweep(&sweep_cfg("preset:closed-form-undelayed", "dt", &["1e-2", "5e-3", "2.5e-3"], dir.path())).unwrap();
    let errs: Vec<f64> = result.rows.iter().rev().map(|r| r.ref_error).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((13.0..20.0).contains(&ratio), "ratio {ratio} from {errs:?}");
    }
}

#[test]
fn worker_count_does_not_change_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sweep_cfg("preset:constant-delay-linear", "influence.c", &["0.5", "1", "2"], dir.path());
    let serial = sweep(&RunConfig { workers: Some(1), ..cfg.clone() }).unwrap().to_csv();
    cfg.workers = Some(3);
    assert_eq!(sweep(&cfg).unwrap().to_csv(), serial);
}

#[test]
fn failing_row_is_flagged_and_the_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&sweep_cfg("preset:flocked", "dt", &["-1", "0.01"], dir.path())).unwrap();
    assert_eq!(out.exit_code, EXIT_FAIL);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("-1,NaN") && lines[1].contains(",false,"));
    assert!(lines[2].starts_with("0.01,") && lines[2].ends_with(",true,"));
}

#[test]
fn set_path_keeps_types() {
    let mut doc: toml::Value = toml::from_str("a = 1\n[b]\nc = 2.5\nd = \"x\"\n").unwrap();
    set_path(&mut doc, "a", "3").unwrap();
    set_path(&mut doc, "b.c", "4").unwrap();
    set_path(&mut doc, "b.d", "y").unwrap();
    assert_eq!(doc["a"], toml::Value::Integer(3));
    assert_eq!(doc["b"]["c"], toml::Value::Float(4.0));
    assert_eq!(doc["b"]["d"], toml::Value::String("y".into()));
    assert!(set_path(&mut doc, "a", "1.5").is_err());
    assert!(set_path(&mut doc, "z.c", "1").is_err());
    assert!(set_path(&mut doc, "a.c", "1").is_err());
}
