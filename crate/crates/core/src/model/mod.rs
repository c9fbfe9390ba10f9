//! Model ingredients: influence law, delay law, initial history, and the
//! scenario that bundles them.

mod delay;
mod history;
mod influence;

pub use delay::{DelayLaw, DelaySpec};
pub use history::{AgentHistory, HistorySpec, PathLaw, SampledPath};
pub use influence::InfluenceSpec;

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("invalid scenario:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n")
}

/// A violated invariant with the field path that caused it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Default upper end of the distance grid used to sample `ψ` during validation.
pub const DEFAULT_R_MAX: f64 = 1.0e3;

const VALIDATION_SAMPLES: usize = 10_000;

/// Full problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    /// Number of agents `N`.
    pub agents: usize,
    /// Space dimension `d`.
    pub dim: usize,
    pub tau_bar: f64,
    /// Horizon `T`. Either this or `horizon_windows` must be set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Horizon as a multiple of `tau_bar`; takes precedence over `horizon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_windows: Option<f64>,
    pub dt: f64,
    /// Output sampling stride, in mesh points.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Upper end of the `ψ` validation grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    pub influence: InfluenceSpec,
    pub delay: DelayLaw,
    pub history: HistorySpec,
}

fn default_stride() -> usize {
    1
}

impl ScenarioSpec {
    /// The horizon `T`.
    pub fn horizon(&self) -> f64 {
        match (self.horizon_windows, self.horizon) {
            (Some(w), _) => w * self.tau_bar,
            (None, Some(t)) => t,
            (None, None) => f64::NAN,
        }
    }

    pub fn delay_spec(&self) -> DelaySpec {
        DelaySpec::new(self.delay.clone(), self.tau_bar)
    }

    pub fn state_len(&self) -> usize {
        2 * self.agents * self.dim
    }

    /// Position and velocity of agent `i` on the history interval.
    pub fn eval_history(&self, i: usize, s: f64) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        self.history.eval(i, s, self.tau_bar)
    }

    /// Checks every invariant and returns the scenario unchanged, or the full
    /// list of violations.
    pub fn validate(&self) -> Result<ScenarioSpec, ModelError> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(self.clone())
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.agents < 2 {
            v.push(Violation::new("agents", format!("N ≥ 2 required, got {}", self.agents)));
        }
        if self.dim < 1 {
            v.push(Violation::new("dim", "d ≥ 1 required"));
        }
        let tb = self.tau_bar;
        if !(tb > 0.0 && tb.is_finite()) {
            v.push(Violation::new("tau_bar", format!("tau_bar must be positive and finite, got {tb}")));
            return v;
        }
        let t_end = self.horizon();
        if !(t_end > 0.0 && t_end.is_finite()) {
            v.push(Violation::new("horizon", format!("horizon T must be positive and finite, got {t_end}")));
        }
        if !(self.dt > 0.0 && self.dt <= tb) {
            v.push(Violation::new("dt", format!("need 0 < dt ≤ tau_bar = {tb}, got {}", self.dt)));
        }
        if self.stride == 0 {
            v.push(Violation::new("stride", "stride must be ≥ 1"));
        }
        let inf = self.influence.violations("influence");
        let inf_ok = inf.is_empty();
        v.extend(inf);
        let delay = self.delay_spec();
        let dv = delay.violations("delay");
        let delay_ok = dv.is_empty();
        v.extend(dv);
        v.extend(self.history.violations("history", self.agents, self.dim, tb));

        if inf_ok {
            let r_max = self.r_max.unwrap_or(DEFAULT_R_MAX);
            let k = self.influence.sup();
            for j in 0..=VALIDATION_SAMPLES {
                let r = r_max * j as f64 / VALIDATION_SAMPLES as f64;
                let p = self.influence.value(r);
                if !(p > 0.0) || p > k * (1.0 + 1e-12) {
                    v.push(Violation::new("influence", format!("ψ({r}) = {p} outside (0, K = {k}]")));
                    break;
                }
            }
        }
        if delay_ok && t_end.is_finite() && t_end > 0.0 {
            for j in 0..=VALIDATION_SAMPLES {
                let t = t_end * j as f64 / VALIDATION_SAMPLES as f64;
                let tau = delay.value(t);
                if !(tau >= 0.0 && tau <= tb) {
                    v.push(Violation::new("delay", format!("τ({t}) = {tau} outside [0, {tb}]")));
                    break;
                }
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn single_agent_rejected() {
        let mut s = presets::default_delayed();
        s.agents = 1;
        s.history.agents.truncate(1);
        let err = s.validate().unwrap_err();
        let ModelError::Invalid(v) = err else { panic!() };
        assert!(v.iter().any(|v| v.message.contains("N ≥ 2 required")));
    }

    #[test]
    fn zero_table_sample_rejected() {
        let mut s = presets::default_delayed();
        s.influence = InfluenceSpec::Table { r: vec![0.0, 1.0, 2.0], psi: vec![1.0, 0.0, 0.5], diverges: true };
        let ModelError::Invalid(v) = s.validate().unwrap_err() else { panic!() };
        assert!(v.iter().any(|v| v.message.contains("ψ must be positive")));
    }

    #[test]
    fn valid_preset_accepted_unchanged() {
        for s in presets::all() {
            assert_eq!(s.validate().unwrap(), s, "{}", s.name);
        }
    }

    #[test]
    fn dt_larger_than_tau_bar_rejected() {
        let mut s = presets::default_delayed();
        s.dt = 2.0 * s.tau_bar;
        let ModelError::Invalid(v) = s.validate().unwrap_err() else { panic!() };
        assert_eq!(v[0].path, "dt");
    }

    #[test]
    fn every_violation_is_reported() {
        let mut s = presets::default_delayed();
        s.dim = 0;
        s.dt = -1.0;
        s.delay = DelayLaw::Constant { tau0: 5.0 };
        let ModelError::Invalid(v) = s.validate().unwrap_err() else { panic!() };
        let paths: Vec<_> = v.iter().map(|v| v.path.as_str()).collect();
        assert!(paths.contains(&"dim") && paths.contains(&"dt") && paths.contains(&"delay.tau0"), "{paths:?}");
    }
}
