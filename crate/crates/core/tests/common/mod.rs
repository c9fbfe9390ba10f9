#![allow(dead_code)]

use flockcert::model::{AgentHistory, DelayLaw, HistorySpec, InfluenceSpec, PathLaw};
use flockcert::{ScenarioSpec, Trajectory};

/// `d_V` of the two-agent undelayed scenario with unit weights.
pub fn closed_form_dv(t: f64) -> f64 {
    2.0 * (-2.0 * t).exp()
}

/// `ψ ≡ 1`, no lag, agents at `x = i` with velocities alternating `±1`.
pub fn unit_weight_scenario(agents: usize, tau_bar: f64, dt: f64) -> ScenarioSpec {
    let history = (0..agents)
        .map(|i| AgentHistory {
            position: PathLaw::Constant { value: vec![i as f64] },
            velocity: PathLaw::Constant { value: vec![if i % 2 == 0 { 1.0 } else { -1.0 }] },
        })
        .collect();
    ScenarioSpec {
        name: format!("unit-weight-{agents}"),
        agents,
        dim: 1,
        tau_bar,
        horizon: None,
        horizon_windows: Some(8.0),
        dt,
        stride: 1,
        r_max: None,
        influence: InfluenceSpec::Constant { c: 1.0 },
        delay: DelayLaw::Constant { tau0: 0.0 },
        history: HistorySpec::new(history),
    }
    .validate()
    .expect("valid scenario")
}

/// Brute-force `max_{i,j} |p_i − p_j|`.
pub fn brute_diameter(points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for p in points {
        for q in points {
            let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            best = best.max(d);
        }
    }
    best
}

/// Root of `∫₀^z g = 3e^{Kτ̄}D₀ + ∫₀^{a2} g` for a nonincreasing `ψ`, where
/// `g = min{e^{−Kτ̄}ψ, e^{−2Kτ̄}/τ̄}`: composite trapezoid on `points`
/// uniform nodes, then a linear scan of the cumulative sums.
pub fn trapezoid_scan_dstar(psi: &InfluenceSpec, tau_bar: f64, d0: f64, a2: f64, points: usize) -> f64 {
    let k = psi.sup();
    let g = |r: f64| ((-k * tau_bar).exp() * psi.eval(r).unwrap()).min((-2.0 * k * tau_bar).exp() / tau_bar);
    let trap = |a: f64, b: f64| {
        let h = (b - a) / (points - 1) as f64;
        let mut cum = vec![0.0; points];
        for i in 1..points {
            let (r0, r1) = (a + h * (i - 1) as f64, a + h * i as f64);
            cum[i] = cum[i - 1] + 0.5 * h * (g(r0) + g(r1));
        }
        cum
    };
    let base = *trap(0.0, a2).last().unwrap();
    let target = 3.0 * (k * tau_bar).exp() * d0 + base;
    let mut z = 2.0 * a2.max(1.0);
    loop {
        let cum = trap(0.0, z);
        if *cum.last().unwrap() >= target {
            let h = z / (points - 1) as f64;
            let i = cum.iter().position(|&c| c >= target).unwrap();
            if i == 0 {
                return 0.0;
            }
            let frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
            return h * (i - 1) as f64 + frac * h;
        }
        z *= 2.0;
    }
}

/// Largest state difference at the mesh points of `coarse` against
/// `fine`, over `t ≥ 0`.
pub fn sup_state_error(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let mut err = 0.0f64;
    for k in coarse.live_start()..coarse.mesh().len() {
        let t = coarse.mesh()[k];
        let mut reference = vec![0.0; coarse.state_at_index(k).len()];
        fine.eval_into(t, &mut reference).unwrap();
        for (a, b) in coarse.state_at_index(k).iter().zip(&reference) {
            err = err.max((a - b).abs());
        }
    }
    err
}
