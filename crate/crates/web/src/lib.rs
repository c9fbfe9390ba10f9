//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every function takes a scenario as TOML text and returns JSON text.

use flockcert::certificates::Certifier;
use flockcert::diagnostics::WeightFloor;
use flockcert::{integrate, io, presets, ScenarioSpec, Tolerances};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse(toml_text: &str) -> Result<ScenarioSpec, String> {
    io::parse_scenario(toml_text, "scenario").map_err(|e| e.to_string())
}

fn sample_indices(len: usize, max_points: usize) -> Vec<usize> {
    let stride = len.div_ceil(max_points.max(2)).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

#[derive(Serialize)]
struct Paths {
    t: Vec<f64>,
    /// `positions[i][k]` is agent `i` at sample `k`.
    positions: Vec<Vec<Vec<f64>>>,
    velocities: Vec<Vec<Vec<f64>>>,
}

/// Trajectory of every agent, thinned to about `max_points` samples.
pub fn simulate_json(toml_text: &str, max_points: usize) -> Result<String, String> {
    let spec = parse(toml_text)?;
    let traj = integrate(&spec).map_err(|e| e.to_string())?;
    let (n, d) = (traj.agents(), traj.dim());
    let mut out = Paths { t: Vec::new(), positions: vec![Vec::new(); n], velocities: vec![Vec::new(); n] };
    for k in sample_indices(traj.mesh().len(), max_points) {
        let y = traj.state_at_index(k);
        out.t.push(traj.mesh()[k]);
        for i in 0..n {
            out.positions[i].push(y[i * d..(i + 1) * d].to_vec());
            out.velocities[i].push(y[(n + i) * d..(n + i + 1) * d].to_vec());
        }
    }
    Ok(serde_json::to_string(&out).expect("serializes"))
}

/// Certificate report plus the `d_V`, envelope and exponential-bound series.
pub fn certify_json(toml_text: &str, max_points: usize) -> Result<String, String> {
    let spec = parse(toml_text)?;
    let traj = integrate(&spec).map_err(|e| e.to_string())?;
    let cert = Certifier::new(&traj, &Tolerances::default()).map_err(|e| e.to_string())?;
    let stride = traj.mesh().len().div_ceil(max_points.max(2)).max(1);
    let series = cert.series(stride);
    Ok(json!({ "report": cert.report(), "series": series }).to_string())
}

/// `ψ`, its running minimum and the weight floor `g` on `[0, r_max]`.
pub fn influence_json(toml_text: &str, r_max: f64, points: usize) -> Result<String, String> {
    let spec = parse(toml_text)?;
    if !(r_max > 0.0 && r_max.is_finite()) || points < 2 {
        return Err("need r_max > 0 and at least two points".into());
    }
    let psi = &spec.influence;
    let floor = WeightFloor::new(psi, psi.sup(), spec.tau_bar);
    let r: Vec<f64> = (0..points).map(|k| r_max * k as f64 / (points - 1) as f64).collect();
    let vals: Result<Vec<f64>, _> = r.iter().map(|&x| psi.eval(x)).collect();
    Ok(json!({
        "r": r,
        "psi": vals.map_err(|e| e.to_string())?,
        "running_min": r.iter().map(|&x| psi.running_min(x)).collect::<Vec<_>>(),
        "floor": r.iter().map(|&x| floor.g(x)).collect::<Vec<_>>(),
        "k": psi.sup(),
        "monotone": psi.is_monotone(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn preset_names() -> String {
    serde_json::to_string(&presets::NAMES).expect("serializes")
}

#[wasm_bindgen]
pub fn preset_toml(name: &str) -> Result<String, JsError> {
    presets::by_name(name).map(|s| io::scenario_to_toml(&s)).ok_or_else(|| JsError::new(&format!("unknown preset {name}")))
}

#[wasm_bindgen]
pub fn simulate(toml_text: &str, max_points: usize) -> Result<String, JsError> {
    simulate_json(toml_text, max_points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn certify(toml_text: &str, max_points: usize) -> Result<String, JsError> {
    certify_json(toml_text, max_points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn influence_profile(toml_text: &str, r_max: f64, points: usize) -> Result<String, JsError> {
    influence_json(toml_text, r_max, points).map_err(|e| JsError::new(&e))
}
