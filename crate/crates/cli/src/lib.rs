//! Pipelines behind the `flockcert` binary: simulate, certify, sweep and
//! selftest. Every pipeline writes its files atomically and returns the
//! process exit code.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use flockcert::certificates::{CertError, Certifier};
use flockcert::diagnostics::{diameter_position, diameter_velocity, Diagnostics};
use flockcert::integrator::IntegrateError;
use flockcert::{integrate, io, presets, CertificateReport, ScenarioSpec, Tolerances, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub mod svg;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("solution blew up; last good time t = {last_good_time:.16e} ({reason})")]
    BlowUp { last_good_time: f64, reason: String },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BlowUp { .. } => EXIT_BLOWUP,
            _ => EXIT_CONFIG,
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IntegrateError> for CliError {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::BlowUp { last_good_time, reason } => CliError::BlowUp { last_good_time, reason },
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Certify,
    Sweep,
    Selftest,
}

/// Parameter path (dotted, into the scenario document) and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    /// File path, or `preset:<name>`.
    pub scenario: String,
    pub out_dir: PathBuf,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub stride: Option<usize>,
    pub tol_block: Option<PathBuf>,
    pub axis: Option<SweepAxis>,
    pub svg: bool,
    /// Multiply the trajectory by `e^{rate·t}` before certifying.
    pub corrupt_exp: Option<f64>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(mode: Mode, scenario: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            mode,
            scenario: scenario.into(),
            out_dir: out_dir.into(),
            dt: None,
            horizon: None,
            stride: None,
            tol_block: None,
            axis: None,
            svg: false,
            corrupt_exp: None,
            workers: None,
        }
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        match &self.tol_block {
            Some(p) => Ok(io::load_tolerances(p)?),
            None => Ok(Tolerances::default()),
        }
    }
}

/// Loads the scenario named by `source` without applying overrides.
pub fn load_source(source: &str) -> Result<ScenarioSpec, CliError> {
    if let Some(name) = source.strip_prefix("preset:") {
        return presets::by_name(name).ok_or_else(|| CliError::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", "))));
    }
    Ok(io::load_scenario(Path::new(source))?)
}

/// Scenario with the `dt`, `T` and `stride` overrides applied and validated.
pub fn load_scenario(cfg: &RunConfig) -> Result<ScenarioSpec, CliError> {
    let spec = load_source(&cfg.scenario)?;
    apply_overrides(spec, cfg)
}

fn apply_overrides(mut spec: ScenarioSpec, cfg: &RunConfig) -> Result<ScenarioSpec, CliError> {
    if let Some(dt) = cfg.dt {
        spec.dt = dt;
    }
    if let Some(t) = cfg.horizon {
        spec.horizon = Some(t);
        spec.horizon_windows = None;
    }
    if let Some(s) = cfg.stride {
        spec.stride = s;
    }
    spec.validate().map_err(|e| CliError::Config(format!("{}: {e}", cfg.scenario)))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory followed by a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let err = |source| CliError::Write { path: path.display().to_string(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Files produced by a pipeline, for the caller to report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub exit_code: i32,
    pub written: Vec<PathBuf>,
    pub messages: Vec<String>,
}

impl Outcome {
    fn write(&mut self, path: PathBuf, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(&path, contents)?;
        self.written.push(path);
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.mode {
        Mode::Simulate => run_simulate(cfg),
        Mode::Certify => run_certify(cfg),
        Mode::Sweep => run_sweep(cfg),
        Mode::Selftest => run_selftest(cfg),
    }
}

/// `trajectory.csv` and `diagnostics.csv`.
pub fn run_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = load_scenario(cfg)?;
    let tol = cfg.tolerances()?;
    let traj = integrate(&spec)?;
    let diag = Diagnostics::new(&traj, &tol.diagnostics).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = Outcome::default();
    out.write(cfg.out_dir.join("trajectory.csv"), io::trajectory_csv(&traj, spec.stride).as_bytes())?;
    out.write(cfg.out_dir.join("diagnostics.csv"), io::diagnostics_csv(&diag.series(spec.stride)).as_bytes())?;
    Ok(out)
}

/// Report written when the certificate constants cannot be formed.
#[derive(Serialize)]
struct FailedReport<'a> {
    scenario: &'a str,
    fingerprint: String,
    all_pass: bool,
    error: String,
}

fn certify_trajectory(spec: &ScenarioSpec, traj: &Trajectory, tol: &Tolerances, cfg: &RunConfig, out: &mut Outcome) -> Result<Option<CertificateReport>, CliError> {
    let cert = match Certifier::new(traj, tol) {
        Ok(c) => c,
        Err(CertError::Diagnostics(e)) => return Err(CliError::Config(e.to_string())),
        Err(e) => {
            let doc = FailedReport { scenario: &spec.name, fingerprint: io::fingerprint(spec), all_pass: false, error: e.to_string() };
            let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
            text.push('\n');
            out.write(cfg.out_dir.join("report.json"), text.as_bytes())?;
            out.messages.push(format!("certificate unavailable: {e}"));
            out.exit_code = EXIT_FAIL;
            return Ok(None);
        }
    };
    let report = cert.report();
    let series = cert.series(spec.stride);
    out.write(cfg.out_dir.join("report.json"), io::report_json(&report).as_bytes())?;
    out.write(cfg.out_dir.join("diagnostics.csv"), io::diagnostics_csv(&series).as_bytes())?;
    if cfg.svg {
        out.write(cfg.out_dir.join("dv_envelope.svg"), svg::decay_plot(&series).as_bytes())?;
    }
    if report.meta.partial {
        out.messages.push("partial: horizon shorter than 4·tau_bar".into());
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        out.messages.push(format!("FAIL {} margin {:?}", c.name, c.margin));
    }
    out.exit_code = report.exit_code();
    Ok(Some(report))
}

/// `report.json`, `diagnostics.csv` with the envelope columns, and
/// optionally `dv_envelope.svg`.
pub fn run_certify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = load_scenario(cfg)?;
    let tol = cfg.tolerances()?;
    let mut traj = integrate(&spec)?;
    if let Some(rate) = cfg.corrupt_exp {
        traj = traj.with_exponential_growth(rate);
    }
    let mut out = Outcome::default();
    certify_trajectory(&spec, &traj, &tol, cfg, &mut out)?;
    Ok(out)
}

/// One sweep run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub d0: f64,
    pub k: f64,
    pub c: f64,
    pub d_star: f64,
    pub sup_dx: f64,
    /// Least-squares slope of `−ln d_V` on `[2τ̄, T]`.
    pub dv_rate_fit: f64,
    /// Richardson estimate `(16/15)·sup|y_dt − y_{dt/2}|` of the global error.
    pub ref_error: f64,
    pub all_pass: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(value: &str, error: String) -> Self {
        Self {
            value: value.to_string(),
            d0: f64::NAN,
            k: f64::NAN,
            c: f64::NAN,
            d_star: f64::NAN,
            sup_dx: f64::NAN,
            dv_rate_fit: f64::NAN,
            ref_error: f64::NAN,
            all_pass: false,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.all_pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,D0,K,C,d_star,sup_dX,dV_rate_fit,ref_error,all_pass,error\n");
        for r in &self.rows {
            write!(s, "{}", r.value).unwrap();
            for x in [r.d0, r.k, r.c, r.d_star, r.sup_dx, r.dv_rate_fit, r.ref_error] {
                write!(s, ",{x:.16e}").unwrap();
            }
            let err = r.error.as_deref().unwrap_or("").replace([',', '\n', '"'], " ");
            writeln!(s, ",{},{err}", r.all_pass).unwrap();
        }
        s
    }
}

/// Sets the entry at a dotted `path` of a TOML document, keeping the type
/// of the existing entry where the text allows it.
pub fn set_path(doc: &mut toml::Value, path: &str, raw: &str) -> Result<(), String> {
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let table = cur.as_table_mut().ok_or_else(|| format!("{}: not a table", keys[..i].join(".")))?;
        if i + 1 == keys.len() {
            let new = match table.get(*key) {
                Some(toml::Value::Integer(_)) => raw.parse::<i64>().map(toml::Value::Integer).map_err(|_| format!("{path}: expected an integer, got {raw:?}"))?,
                Some(toml::Value::Float(_)) | None => match raw.parse::<f64>() {
                    Ok(x) => toml::Value::Float(x),
                    Err(_) if table.get(*key).is_none() => toml::Value::String(raw.to_string()),
                    Err(_) => return Err(format!("{path}: expected a number, got {raw:?}")),
                },
                Some(toml::Value::String(_)) => toml::Value::String(raw.to_string()),
                Some(toml::Value::Boolean(_)) => raw.parse::<bool>().map(toml::Value::Boolean).map_err(|_| format!("{path}: expected a boolean, got {raw:?}"))?,
                Some(_) => return Err(format!("{path}: cannot sweep a structured entry")),
            };
            table.insert(key.to_string(), new);
            return Ok(());
        }
        cur = table.get_mut(*key).ok_or_else(|| format!("{path}: no entry {key:?}"))?;
    }
    unreachable!("split yields at least one key")
}

fn sweep_spec(base: &toml::Value, axis: &SweepAxis, value: &str, cfg: &RunConfig) -> Result<ScenarioSpec, String> {
    let mut doc = base.clone();
    set_path(&mut doc, &axis.param, value)?;
    if axis.param == "horizon" {
        doc.as_table_mut().expect("scenario is a table").remove("horizon_windows");
    }
    let spec: ScenarioSpec = doc.try_into().map_err(|e: toml::de::Error| e.to_string())?;
    let overrides = RunConfig { dt: if axis.param == "dt" { None } else { cfg.dt }, ..cfg.clone() };
    apply_overrides(spec, &overrides).map_err(|e| e.to_string())
}

/// Least-squares slope of `−ln d_V` against `t` over `t ≥ 2τ̄`, skipping
/// samples at or below the round-off level.
pub fn dv_rate_fit(traj: &Trajectory) -> f64 {
    let start = 2.0 * traj.tau_bar();
    let mut pts = Vec::new();
    let mut top = 0.0f64;
    for k in traj.live_start()..traj.mesh().len() {
        let dv = diameter_velocity(&traj.phase_state_at_index(k));
        top = top.max(dv);
        if traj.mesh()[k] >= start {
            pts.push((traj.mesh()[k], dv));
        }
    }
    let pts: Vec<(f64, f64)> = pts.into_iter().filter(|&(_, v)| v > 1e-13 * top && v > 0.0).map(|(t, v)| (t, v.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    -num / den
}

fn sup_state_error(coarse: &Trajectory, fine: &Trajectory) -> Result<f64, IntegrateError> {
    let mut buf = vec![0.0; coarse.state_at_index(0).len()];
    let mut err = 0.0f64;
    for k in coarse.live_start()..coarse.mesh().len() {
        fine.eval_into(coarse.mesh()[k], &mut buf)?;
        for (a, b) in coarse.state_at_index(k).iter().zip(&buf) {
            err = err.max((a - b).abs());
        }
    }
    Ok(err)
}

fn sweep_row(spec: &ScenarioSpec, value: &str, tol: &Tolerances) -> SweepRow {
    let traj = match integrate(spec) {
        Ok(t) => t,
        Err(e) => return SweepRow::failed(value, e.to_string()),
    };
    let cert = match Certifier::new(&traj, tol) {
        Ok(c) => c,
        Err(e) => return SweepRow::failed(value, e.to_string()),
    };
    let report = cert.report();
    let sup_dx = (traj.live_start()..traj.mesh().len()).map(|k| diameter_position(&traj.phase_state_at_index(k))).fold(0.0, f64::max);
    let mut fine = spec.clone();
    fine.dt = spec.dt / 2.0;
    let ref_error = integrate(&fine)
        .map_err(|e| e.to_string())
        .and_then(|f| sup_state_error(&traj, &f).map_err(|e| e.to_string()))
        .map(|e| e * 16.0 / 15.0);
    let c = report.constants;
    SweepRow {
        value: value.to_string(),
        d0: c.d0,
        k: c.k,
        c: c.c,
        d_star: c.d_star,
        sup_dx,
        dv_rate_fit: dv_rate_fit(&traj),
        ref_error: *ref_error.as_ref().unwrap_or(&f64::NAN),
        all_pass: report.all_pass() && ref_error.is_ok(),
        error: ref_error.err(),
    }
}

/// Rows ordered by swept value (numerically when every value is a number,
/// otherwise in the given order).
pub fn sweep(cfg: &RunConfig) -> Result<SweepResult, CliError> {
    let axis = cfg.axis.clone().ok_or_else(|| CliError::Config("sweep needs --param and --values".into()))?;
    if axis.values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let base = load_source(&cfg.scenario)?;
    let doc = toml::Value::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
    let tol = cfg.tolerances()?;
    let mut values = axis.values.clone();
    let numeric: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut pairs: Vec<(f64, String)> = nums.into_iter().zip(values).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        values = pairs.into_iter().map(|p| p.1).collect();
    }
    // a bad path is a configuration error; a bad value only fails its row
    let mut probe = doc.clone();
    set_path(&mut probe, &axis.param, &values[0]).map_err(CliError::Config)?;
    ScenarioSpec::deserialize(probe).map_err(|e| CliError::Config(format!("--param {}: {e}", axis.param)))?;
    let job = || -> Vec<SweepRow> {
        values
            .par_iter()
            .map(|v| match sweep_spec(&doc, &axis, v, cfg) {
                Ok(spec) => sweep_row(&spec, v, &tol),
                Err(e) => SweepRow::failed(v, e),
            })
            .collect()
    };
    let rows = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build().map_err(|e| CliError::Config(e.to_string()))?.install(job),
        None => job(),
    };
    Ok(SweepResult { param: axis.param, rows })
}

/// `sweep.csv`; exits 1 if any row fails.
pub fn run_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let result = sweep(cfg)?;
    let mut out = Outcome::default();
    out.write(cfg.out_dir.join("sweep.csv"), result.to_csv().as_bytes())?;
    for r in result.rows.iter().filter(|r| !r.all_pass) {
        out.messages.push(format!("row {}={} fails{}", result.param, r.value, r.error.as_ref().map(|e| format!(": {e}")).unwrap_or_default()));
    }
    out.exit_code = if result.all_pass() { EXIT_PASS } else { EXIT_FAIL };
    Ok(out)
}

/// Growth rate of the corrupted negative-control fixture.
pub const SELFTEST_GROWTH: f64 = 1.0;

/// Certifies every preset (all must pass) and the corrupted fixture (must
/// fail). Writes `selftest.txt` and one report per run under `out_dir`.
pub fn run_selftest(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let tol = cfg.tolerances()?;
    let mut out = Outcome::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for name in presets::NAMES {
        let spec = presets::by_name(name).expect("known preset");
        let traj = integrate(&spec)?;
        let sub = RunConfig { out_dir: cfg.out_dir.join(name), svg: false, ..cfg.clone() };
        let mut part = Outcome::default();
        let report = certify_trajectory(&spec, &traj, &tol, &sub, &mut part)?;
        out.written.append(&mut part.written);
        let pass = report.as_ref().is_some_and(|r| r.all_pass());
        ok &= pass;
        lines.push(format!("{name}: {}", if pass { "pass (expected pass)" } else { "FAIL (expected pass)" }));
    }
    let spec = presets::default_delayed();
    let traj = integrate(&spec)?.with_exponential_growth(SELFTEST_GROWTH);
    let sub = RunConfig { out_dir: cfg.out_dir.join("corrupted"), svg: false, ..cfg.clone() };
    let mut part = Outcome::default();
    let report = certify_trajectory(&spec, &traj, &tol, &sub, &mut part)?;
    out.written.append(&mut part.written);
    let failing: Vec<&str> = report.as_ref().map(|r| r.failing()).unwrap_or_default();
    let caught = part.exit_code == EXIT_FAIL && !failing.is_empty();
    ok &= caught;
    lines.push(format!("corrupted fixture: exit {} failing {}", part.exit_code, failing.join(" ")));
    let mut text = lines.join("\n");
    text.push('\n');
    out.write(cfg.out_dir.join("selftest.txt"), text.as_bytes())?;
    out.messages = lines;
    out.exit_code = if ok { EXIT_PASS } else { EXIT_FAIL };
    Ok(out)
}
