//! Named scenarios shipped with the crate. Each one pins down a single
//! property of the delayed model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

use crate::model::{AgentHistory, DelayLaw, HistorySpec, InfluenceSpec, PathLaw, SampledPath, ScenarioSpec};

pub const NAMES: [&str; 6] = [
    "flocked",
    "closed-form-undelayed",
    "constant-delay-linear",
    "default-delayed",
    "non-monotone-psi",
    "large-delay",
];

pub fn by_name(name: &str) -> Option<ScenarioSpec> {
    Some(match name {
        "flocked" => flocked(),
        "closed-form-undelayed" => closed_form_undelayed(),
        "constant-delay-linear" => constant_delay_linear(),
        "default-delayed" => default_delayed(),
        "non-monotone-psi" => non_monotone_psi(),
        "large-delay" => large_delay(),
        _ => return None,
    })
}

pub fn all() -> Vec<ScenarioSpec> {
    NAMES.iter().map(|n| by_name(n).expect("listed preset")).collect()
}

fn base(name: &str, agents: usize, dim: usize, tau_bar: f64, dt: f64, influence: InfluenceSpec, delay: DelayLaw, history: Vec<AgentHistory>) -> ScenarioSpec {
    ScenarioSpec {
        name: name.to_string(),
        agents,
        dim,
        tau_bar,
        horizon: None,
        horizon_windows: Some(8.0),
        dt,
        stride: 1,
        r_max: None,
        influence,
        delay,
        history: HistorySpec::new(history),
    }
}

fn constant(value: Vec<f64>) -> PathLaw {
    PathLaw::Constant { value }
}

/// Random linear history laws: positions in `[-spread, spread]^d`, velocities
/// of size up to `speed`, both drifting linearly in `s`.
fn random_linear_history(seed: u64, agents: usize, dim: usize, spread: f64, speed: f64) -> Vec<AgentHistory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vec = |scale: f64| -> Vec<f64> { (0..dim).map(|_| round6(rng.gen_range(-scale..scale))).collect() };
    (0..agents)
        .map(|_| {
            let v0 = vec(speed);
            let p0 = vec(spread);
            let dv = vec(0.2 * speed);
            AgentHistory {
                position: PathLaw::Linear { at_zero: p0, slope: v0.clone() },
                velocity: PathLaw::Linear { at_zero: v0, slope: dv },
            }
        })
        .collect()
}

/// Keeps preset files short and exactly representable in decimal.
fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// All agents already move with one common velocity.
pub fn flocked() -> ScenarioSpec {
    let w = vec![0.6, 0.3];
    let history = [[0.0, 0.0], [1.0, 0.5], [-0.5, 2.0], [2.0, -1.0]]
        .iter()
        .map(|p| AgentHistory {
            position: PathLaw::Linear { at_zero: p.to_vec(), slope: w.clone() },
            velocity: constant(w.clone()),
        })
        .collect();
    base(
        "flocked",
        4,
        2,
        1.0,
        0.01,
        InfluenceSpec::CuckerSmale { k0: 1.0, beta: 0.5 },
        DelayLaw::Sinusoidal { omega: FRAC_PI_2, phase: 0.0 },
        history,
    )
}

/// Two agents, no delay, unit weights: `w = v₁ − v₂` solves `w′ = −2w`.
pub fn closed_form_undelayed() -> ScenarioSpec {
    let history = vec![
        AgentHistory { position: constant(vec![0.0]), velocity: constant(vec![1.0]) },
        AgentHistory { position: constant(vec![1.0]), velocity: constant(vec![-1.0]) },
    ];
    base(
        "closed-form-undelayed",
        2,
        1,
        0.625,
        1e-3,
        InfluenceSpec::Constant { c: 1.0 },
        DelayLaw::Constant { tau0: 0.0 },
        history,
    )
}

/// Two agents, unit weights, constant lag: a linear delay equation.
pub fn constant_delay_linear() -> ScenarioSpec {
    let history = vec![
        AgentHistory { position: constant(vec![0.0]), velocity: constant(vec![1.0]) },
        AgentHistory { position: constant(vec![1.0]), velocity: constant(vec![-1.0]) },
    ];
    base(
        "constant-delay-linear",
        2,
        1,
        0.25,
        0.01,
        InfluenceSpec::Constant { c: 1.0 },
        DelayLaw::Constant { tau0: 0.25 },
        history,
    )
}

/// Five planar agents, oscillating lag, decaying Cucker–Smale weights.
pub fn default_delayed() -> ScenarioSpec {
    base(
        "default-delayed",
        5,
        2,
        1.0,
        0.01,
        InfluenceSpec::CuckerSmale { k0: 0.5, beta: 0.25 },
        DelayLaw::Sinusoidal { omega: FRAC_PI_2, phase: 0.0 },
        random_linear_history(7, 5, 2, 1.0, 1.0),
    )
}

/// Oscillating influence with a piecewise-linear lag and spline histories.
pub fn non_monotone_psi() -> ScenarioSpec {
    let tau_bar = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let times: Vec<f64> = (0..=4).map(|k| -tau_bar + 0.25 * k as f64 * tau_bar).collect();
    let history = (0..4)
        .map(|_| {
            let mut samples = |scale: f64| -> Vec<Vec<f64>> {
                let anchor: Vec<f64> = (0..2).map(|_| rng.gen_range(-scale..scale)).collect();
                times
                    .iter()
                    .map(|_| anchor.iter().map(|a| round6(a + rng.gen_range(-0.2 * scale..0.2 * scale))).collect())
                    .collect()
            };
            let pos = samples(1.5);
            let vel = samples(1.0);
            AgentHistory {
                position: PathLaw::Sampled(SampledPath::new(times.clone(), pos).expect("valid samples")),
                velocity: PathLaw::Sampled(SampledPath::new(times.clone(), vel).expect("valid samples")),
            }
        })
        .collect();
    base(
        "non-monotone-psi",
        4,
        2,
        tau_bar,
        0.01,
        InfluenceSpec::Oscillating { base: 0.5, amp: 0.25, freq: 1.0 },
        DelayLaw::PiecewiseLinear { knots: vec![[0.0, 0.2], [3.0, 0.9], [6.0, 0.4]] },
        history,
    )
}

/// Lag bound `τ̄ = 4`, far beyond any small-delay regime.
pub fn large_delay() -> ScenarioSpec {
    base(
        "large-delay",
        4,
        2,
        4.0,
        0.02,
        InfluenceSpec::CuckerSmale { k0: 0.25, beta: 0.25 },
        DelayLaw::Sinusoidal { omega: 0.5, phase: 1.0 },
        random_linear_history(23, 4, 2, 1.0, 0.5),
    )
}
