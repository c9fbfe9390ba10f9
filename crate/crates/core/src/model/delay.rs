//! Time-varying transmission delay `τ(t) ∈ [0, τ̄]`.

use serde::{Deserialize, Serialize};

use super::{ModelError, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DelayLaw {
    /// `τ(t) = tau0`
    Constant { tau0: f64 },
    /// `τ(t) = τ̄ · (1 + sin(omega·t + phase)) / 2`
    Sinusoidal { omega: f64, #[serde(default)] phase: f64 },
    /// Linear interpolation through `(t, τ)` knots starting at `t = 0`,
    /// held at the last value afterwards.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
}

/// A delay law together with its upper bound `τ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySpec {
    pub law: DelayLaw,
    pub tau_bar: f64,
}

impl DelaySpec {
    pub fn new(law: DelayLaw, tau_bar: f64) -> Self {
        Self { law, tau_bar }
    }

    pub fn eval(&self, t: f64) -> Result<f64, ModelError> {
        if !(t >= 0.0) {
            return Err(ModelError::Domain(format!("delay queried at t = {t} < 0")));
        }
        Ok(self.value(t))
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        match self.law {
            DelayLaw::Constant { tau0 } => tau0,
            DelayLaw::Sinusoidal { omega, phase } => {
                (self.tau_bar * 0.5 * (1.0 + (omega * t + phase).sin())).clamp(0.0, self.tau_bar)
            }
            DelayLaw::PiecewiseLinear { ref knots } => {
                let last = knots.len() - 1;
                if t >= knots[last][0] {
                    return knots[last][1];
                }
                let hi = knots.partition_point(|k| k[0] <= t).max(1);
                let (a, b) = (knots[hi - 1], knots[hi]);
                a[1] + (t - a[0]) / (b[0] - a[0]) * (b[1] - a[1])
            }
        }
    }

    /// The constant lag, if any. Its multiples are derivative breakpoints of
    /// the solution and get aligned with the integration mesh.
    pub fn constant_lag(&self) -> Option<f64> {
        match self.law {
            DelayLaw::Constant { tau0 } => Some(tau0),
            _ => None,
        }
    }

    pub fn violations(&self, path: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        let tb = self.tau_bar;
        match self.law {
            DelayLaw::Constant { tau0 } => {
                if !(tau0 >= 0.0 && tau0 <= tb) {
                    v.push(Violation::new(format!("{path}.tau0"), format!("need 0 ≤ tau0 ≤ tau_bar = {tb}, got {tau0}")));
                }
            }
            DelayLaw::Sinusoidal { omega, phase } => {
                if !omega.is_finite() || !phase.is_finite() {
                    v.push(Violation::new(format!("{path}.omega"), "omega and phase must be finite".to_string()));
                }
            }
            DelayLaw::PiecewiseLinear { ref knots } => {
                if knots.is_empty() {
                    v.push(Violation::new(format!("{path}.knots"), "at least one knot required".to_string()));
                    return v;
                }
                if knots[0][0] != 0.0 {
                    v.push(Violation::new(format!("{path}.knots[0]"), format!("first knot must sit at t = 0, got {}", knots[0][0])));
                }
                if knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    v.push(Violation::new(format!("{path}.knots"), "knot times must be strictly increasing".to_string()));
                }
                for (k, kn) in knots.iter().enumerate() {
                    if !(kn[1] >= 0.0 && kn[1] <= tb) {
                        v.push(Violation::new(format!("{path}.knots[{k}]"), format!("need 0 ≤ τ ≤ tau_bar = {tb}, got {}", kn[1])));
                    }
                }
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn constant_delay() {
        let d = DelaySpec::new(DelayLaw::Constant { tau0: 0.3 }, 1.0);
        assert_eq!(d.eval(7.0).unwrap(), 0.3);
    }

    #[test]
    fn sinusoidal_delay() {
        let d = DelaySpec::new(DelayLaw::Sinusoidal { omega: FRAC_PI_2, phase: 0.0 }, 1.0);
        assert_eq!(d.eval(1.0).unwrap(), 1.0);
        assert_eq!(d.eval(0.0).unwrap(), 0.5);
    }

    #[test]
    fn negative_time_rejected() {
        let d = DelaySpec::new(DelayLaw::Constant { tau0: 0.3 }, 1.0);
        assert!(d.eval(-0.1).is_err());
    }

    #[test]
    fn piecewise_linear_holds_last_value() {
        let d = DelaySpec::new(DelayLaw::PiecewiseLinear { knots: vec![[0.0, 0.0], [2.0, 1.0]] }, 1.0);
        assert_eq!(d.eval(1.0).unwrap(), 0.5);
        assert_eq!(d.eval(9.0).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_constant_is_a_violation() {
        let d = DelaySpec::new(DelayLaw::Constant { tau0: 1.5 }, 1.0);
        assert_eq!(d.violations("delay").len(), 1);
    }
}
