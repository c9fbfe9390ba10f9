//! Scenario files (TOML), CSV series and report documents.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::certificates::{CertificateReport, Tolerances};
use crate::diagnostics::DiagnosticsSeries;
use crate::integrator::Trajectory;
use crate::model::{ModelError, ScenarioSpec};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario {path}: {source}")]
    Invalid { path: String, source: ModelError },
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioSpec, IoError> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| IoError::Parse { path: origin.to_string(), message: e.to_string() })?;
    spec.validate().map_err(|source| IoError::Invalid { path: origin.to_string(), source })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })?;
    parse_scenario(&text, &path.display().to_string())
}

/// Canonical TOML form: field order fixed by the type, floats in shortest
/// round-trip form.
pub fn scenario_to_toml(spec: &ScenarioSpec) -> String {
    toml::to_string(spec).expect("scenario serializes")
}

/// SHA-256 of the canonical TOML form, hex encoded.
pub fn fingerprint(spec: &ScenarioSpec) -> String {
    hex::encode(Sha256::digest(scenario_to_toml(spec).as_bytes()))
}

/// Tolerance block from TOML or JSON (chosen by extension, `.json` → JSON).
pub fn load_tolerances(path: &Path) -> Result<Tolerances, IoError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read { path: origin.clone(), source })?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| IoError::Parse { path: origin, message })
}

#[inline]
fn num(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("write to String");
}

/// `t,x_0_0,…,x_{N−1}_{d−1},v_0_0,…` at every `stride`-th mesh point from
/// `t = 0` on; the final point is always written.
pub fn trajectory_csv(traj: &Trajectory, stride: usize) -> String {
    let (n, d) = (traj.agents(), traj.dim());
    let mut out = String::from("t");
    for kind in ["x", "v"] {
        for i in 0..n {
            for c in 0..d {
                write!(out, ",{kind}_{i}_{c}").unwrap();
            }
        }
    }
    out.push('\n');
    let mesh = traj.mesh();
    let mut idx: Vec<usize> = (traj.live_start()..mesh.len()).step_by(stride.max(1)).collect();
    if idx.last() != Some(&(mesh.len() - 1)) {
        idx.push(mesh.len() - 1);
    }
    for k in idx {
        num(&mut out, mesh[k]);
        for &y in traj.state_at_index(k) {
            out.push(',');
            num(&mut out, y);
        }
        out.push('\n');
    }
    out
}

/// `t,d_X,d_V,dX_runmax,psi_t,phi` plus `D_env,L,decay_bound` when present.
pub fn diagnostics_csv(series: &DiagnosticsSeries) -> String {
    let extra: Vec<(&str, &Vec<f64>)> = [("D_env", &series.envelope), ("L", &series.lyapunov), ("decay_bound", &series.decay_bound)]
        .into_iter()
        .filter_map(|(name, col)| col.as_ref().map(|c| (name, c)))
        .collect();
    let mut out = String::from("t,d_X,d_V,dX_runmax,psi_t,phi");
    for (name, _) in &extra {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for k in 0..series.len() {
        let row = [series.t[k], series.d_x[k], series.d_v[k], series.dx_runmax[k], series.psi_t[k], series.phi[k]];
        for (j, &x) in row.iter().chain(extra.iter().map(|(_, c)| &c[k])).enumerate() {
            if j > 0 {
                out.push(',');
            }
            num(&mut out, x);
        }
        out.push('\n');
    }
    out
}

pub fn report_json(report: &CertificateReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn presets_round_trip_through_toml() {
        for spec in presets::all() {
            let text = scenario_to_toml(&spec);
            let back = parse_scenario(&text, "memory").unwrap();
            assert_eq!(back, spec, "{}", spec.name);
            assert_eq!(fingerprint(&back), fingerprint(&spec));
        }
    }

    #[test]
    fn unknown_field_is_a_parse_error() {
        let mut text = scenario_to_toml(&presets::flocked());
        text.insert_str(0, "bogus = 1\n");
        assert!(matches!(parse_scenario(&text, "x"), Err(IoError::Parse { .. })));
    }
}
