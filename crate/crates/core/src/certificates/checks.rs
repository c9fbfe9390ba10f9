use serde::{Deserialize, Serialize};

use super::{CertificateReport, Certifier, GridMeta, ReportMeta};
use crate::io::fingerprint;

/// Time or window-index range a check was evaluated over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckRange {
    Time { from: f64, to: f64 },
    Window { from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub range: CheckRange,
    /// Smallest `rhs − lhs` over the samples; `None` when nothing was
    /// sampled.
    pub margin: Option<f64>,
    pub slack: f64,
    /// Time or window index of the worst sample.
    pub worst_at: Option<f64>,
    pub samples: usize,
    pub pass: bool,
}

/// Tracks the sample with the smallest `margin + slack`.
struct Worst {
    margin: f64,
    slack: f64,
    at: f64,
    samples: usize,
}

impl Worst {
    fn new() -> Self {
        Self { margin: f64::INFINITY, slack: 0.0, at: f64::NAN, samples: 0 }
    }

    fn push(&mut self, at: f64, lhs: f64, rhs: f64, slack: f64) {
        let m = rhs - lhs;
        let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
        if self.samples == 0 || m + slack < self.margin + self.slack {
            self.margin = m;
            self.slack = slack;
            self.at = at;
        }
        self.samples += 1;
    }

    fn finish(self, name: &str, range: CheckRange) -> CheckResult {
        let sampled = self.samples > 0;
        CheckResult {
            name: name.to_string(),
            range,
            margin: sampled.then_some(self.margin),
            slack: self.slack,
            worst_at: sampled.then_some(self.at),
            samples: self.samples,
            pass: !sampled || self.margin >= -self.slack,
        }
    }
}

pub(super) fn run(cert: &Certifier) -> CertificateReport {
    let diag = cert.diagnostics();
    let traj = diag.trajectory();
    let tol = cert.tolerances();
    let c = *cert.constants();
    let tb = c.tau_bar;
    let t_end = traj.t_end();
    let (n, d) = (traj.agents(), traj.dim());
    let nd = n * d;
    let mesh = traj.mesh();
    let windows = diag.windows();
    let n_max = windows.len() - 1;
    let discount = diag.floor().discount();
    let floor_slack = |a: f64, b: f64| tol.window_rel * c.d0 + tol.abs_floor * a.abs().max(b.abs());
    let all_time = CheckRange::Time { from: -tb, to: t_end };
    let mut checks = Vec::new();

    // (a) |v_i(t)| ≤ R_V⁰
    let mut w = Worst::new();
    for k in 0..mesh.len() {
        let st = traj.state_at_index(k);
        let vmax = (0..n).map(|i| crate::diagnostics::norm(&st[nd + i * d..nd + (i + 1) * d])).fold(0.0, f64::max);
        w.push(mesh[k], vmax, c.r_v0, floor_slack(vmax, c.r_v0));
    }
    checks.push(w.finish("velocity_bound", all_time));

    // (b) D_{n+1} ≤ D_n
    let mut w = Worst::new();
    for k in 0..n_max {
        let (lhs, rhs) = (windows[k + 1].dn, windows[k].dn);
        w.push(k as f64, lhs, rhs, floor_slack(lhs, rhs));
    }
    checks.push(w.finish("window_monotone", CheckRange::Window { from: 0, to: n_max }));

    // (c) |x_i(t − τ(t)) − x_j(t)| ≤ 2τ̄R_V⁰ + 4M_X⁰ + d_X(t − τ̄), and the
    // matching weight lower bound ψ(|x_i(t) − x_j(t − τ(t))|) ≥ e^{Kτ̄}φ(t − τ̄)
    let delay = traj.scenario().delay_spec();
    let psi = &traj.scenario().influence;
    let mut wc = Worst::new();
    let mut wl = Worst::new();
    let mut lagged = vec![0.0; 2 * nd];
    for k in traj.live_start()..mesh.len() {
        let t = mesh[k];
        let st = traj.state_at_index(k);
        let tau = delay.value(t);
        traj.eval_unchecked(t - tau, &mut lagged);
        let bound = c.radius_offset + diag.dx(t - tb);
        let weight_floor = diag.phi(t - tb) / discount;
        let mut worst_dist = 0.0f64;
        let mut worst_weight = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let xi = &st[i * d..(i + 1) * d];
                let xj = &lagged[j * d..(j + 1) * d];
                let r = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                worst_dist = worst_dist.max(r);
                worst_weight = worst_weight.min(psi.value(r));
            }
        }
        wc.push(t, worst_dist, bound, tol.distance_abs);
        wl.push(t, weight_floor, worst_weight, tol.lower_bound_abs);
    }
    let live_time = CheckRange::Time { from: 0.0, to: t_end };
    checks.push(wc.finish("delayed_distance", live_time));

    // (d) D_{n+1} ≤ e^{−Kτ̄}d_V(nτ̄) + (1 − e^{−Kτ̄})D_n
    let mut w = Worst::new();
    for k in 0..n_max {
        let rhs = discount * diag.dv(k as f64 * tb) + (1.0 - discount) * windows[k].dn;
        let lhs = windows[k + 1].dn;
        w.push(k as f64, lhs, rhs, floor_slack(lhs, rhs));
    }
    checks.push(w.finish("window_contraction", CheckRange::Window { from: 0, to: n_max }));

    // (e) D_{n+1} ≤ (1 − e^{−Kτ̄}∫_{nτ̄−2τ̄}^{nτ̄−τ̄} φ)·D_{n−2}, n ≥ 2
    let mut w = Worst::new();
    for k in 2..n_max {
        let a = (k as f64 - 2.0) * tb;
        let integral = diag.phi_integral(a, a + tb);
        let rhs = (1.0 - discount * integral) * windows[k - 2].dn;
        let lhs = windows[k + 1].dn;
        w.push(k as f64, lhs, rhs, floor_slack(lhs, rhs));
    }
    checks.push(w.finish("three_window_contraction", CheckRange::Window { from: 2, to: n_max }));

    // (f) D_n ≤ 𝓓(t) on [−τ̄, nτ̄]; 𝓓 is nonincreasing so t = nτ̄ is the worst
    let mut w = Worst::new();
    for (k, win) in windows.iter().enumerate() {
        let rhs = cert.envelope(win.end);
        w.push(k as f64, win.dn, rhs, floor_slack(win.dn, rhs));
    }
    checks.push(w.finish("envelope_majorant", CheckRange::Window { from: 0, to: n_max }));

    // (g) 𝓛 nonincreasing on sampled t > 2τ̄
    let times: Vec<f64> = mesh.iter().copied().filter(|&t| t >= 2.0 * tb * (1.0 - 1e-12)).collect();
    let lyap = cert.lyapunov_series(&times);
    let mut w = Worst::new();
    for k in 1..lyap.len() {
        w.push(times[k], lyap[k], lyap[k - 1], tol.lyapunov_rel * (c.d0 + 1.0));
    }
    let from = times.first().copied().unwrap_or(2.0 * tb);
    checks.push(w.finish("lyapunov_nonincreasing", CheckRange::Time { from, to: t_end }));

    // (h) sup d_X ≤ d*
    let mut w = Worst::new();
    let sup_dx = diag.dx_runmax(t_end);
    w.push(t_end, sup_dx, c.d_star, floor_slack(sup_dx, c.d_star));
    checks.push(w.finish("position_bound", all_time));

    // (i) d_V(t) ≤ D₀e^{−C(t−2τ̄)}
    let mut w = Worst::new();
    for k in 0..mesh.len() {
        let st = traj.state_at_index(k);
        let dv = crate::diagnostics::pair_max(&st[nd..], n, d);
        let bound = cert.decay_bound(mesh[k]);
        let slack = tol.decay_rel * bound + tol.decay_abs_rel * c.d0 + tol.abs_floor * dv;
        w.push(mesh[k], dv, bound, slack);
    }
    checks.push(w.finish("velocity_decay", all_time));

    // (j) 𝓓(nτ̄) ≤ D₀e^{−C(n−2)τ̄}
    let mut w = Worst::new();
    for k in 0..=n_max {
        let lhs = cert.envelope(k as f64 * tb);
        let rhs = c.d0 * (-c.c * (k as f64 - 2.0) * tb).exp();
        w.push(k as f64, lhs, rhs, floor_slack(lhs, rhs));
    }
    checks.push(w.finish("envelope_decay", CheckRange::Window { from: 0, to: n_max }));

    checks.push(wl.finish("weight_lower_bound", live_time));

    // M − m ≤ D_n for every sampled direction
    let mut w = Worst::new();
    for (k, win) in windows.iter().enumerate() {
        for dir in &win.directions {
            let spread = dir.max - dir.min;
            w.push(k as f64, spread, win.dn, floor_slack(spread, win.dn));
        }
    }
    checks.push(w.finish("projection_bracket", CheckRange::Window { from: 0, to: n_max }));

    let partial = t_end < 4.0 * tb * (1.0 - 1e-12);
    let mut notes = vec![
        "interaction radius uses 2·tau_bar·R_V0 + 4·M_X0 throughout, including the d* relation".to_string(),
        "three-window contraction is checked against D_{n-2}".to_string(),
        "Lyapunov monotonicity is checked on sampled differences at mesh points".to_string(),
    ];
    if partial {
        notes.push(format!("partial: horizon {t_end} is shorter than 4·tau_bar = {}", 4.0 * tb));
    }
    let all_pass = checks.iter().all(|c| c.pass);
    let scenario = traj.scenario();
    CertificateReport {
        constants: c,
        checks,
        meta: ReportMeta {
            scenario: scenario.name.clone(),
            fingerprint: fingerprint(scenario),
            horizon: t_end,
            partial,
            all_pass,
            grids: GridMeta {
                dt: scenario.dt,
                mesh_points: mesh.len(),
                fine_grid_points: diag.fine_grid().len(),
                window_samples: windows.iter().map(|w| w.samples).collect(),
                windows_accepted: windows.iter().all(|w| w.accepted),
                initial_extremes_accepted: diag.extremes().accepted,
            },
            tolerances: tol.clone(),
            notes,
        },
    }
}
