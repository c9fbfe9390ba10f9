//! Trajectory-derived quantities: diameters, window extrema, initial scales,
//! the running interaction radius and the weight floor `φ`.

mod floor;
mod windows;

pub use floor::WeightFloor;
pub use windows::{window_diameter, window_diameter_accepted, DirectionalExtrema, WindowExtrema};

use serde::{Deserialize, Serialize};

use crate::integrator::{IntegrateError, PhaseState, Trajectory};
use crate::quad::adaptive_simpson;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("window {n} ends at {end}, beyond the horizon {horizon}")]
    WindowBeyondHorizon { n: usize, end: f64, horizon: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Grid and acceptance settings shared by all continuous-time maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    /// Starting grid size per window; doubled as `S → 2S − 1`.
    pub window_samples: usize,
    pub max_window_samples: usize,
    /// Two successive doublings must agree to `accept_rel · D₀`.
    pub accept_rel: f64,
    /// Sub-intervals per mesh cell for the running maximum of `d_X`.
    pub fine_sub: usize,
    /// Relative tolerance of the `∫φ` quadrature.
    pub quad_rel: f64,
    /// Unit directions for the per-window projection extremes.
    pub directions: Vec<Vec<f64>>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            window_samples: 33,
            max_window_samples: 2049,
            accept_rel: 1e-8,
            fine_sub: 4,
            quad_rel: 1e-10,
            directions: Vec::new(),
        }
    }
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn pair_max(points: &[f64], agents: usize, dim: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..agents {
        let p = &points[i * dim..(i + 1) * dim];
        for j in i + 1..agents {
            let q = &points[j * dim..(j + 1) * dim];
            best = best.max(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum());
        }
    }
    best.sqrt()
}

/// `d_X = max_{i,j} |x_i − x_j|`.
pub fn diameter_position(state: &PhaseState) -> f64 {
    pair_max(&state.x, state.agents, state.dim)
}

/// `d_V = max_{i,j} |v_i − v_j|`.
pub fn diameter_velocity(state: &PhaseState) -> f64 {
    pair_max(&state.v, state.agents, state.dim)
}

/// `⟨v_i − v_j, u⟩` for a unit vector `u`.
pub fn directional_diff(state: &PhaseState, i: usize, j: usize, u: &[f64]) -> Result<f64, DiagnosticsError> {
    if u.len() != state.dim || (norm(u) - 1.0).abs() > 1e-12 {
        return Err(DiagnosticsError::Domain(format!("direction {u:?} is not a unit {}-vector", state.dim)));
    }
    if i >= state.agents || j >= state.agents {
        return Err(DiagnosticsError::Domain(format!("agent index out of range 0..{}", state.agents)));
    }
    Ok(state.velocity(i).iter().zip(state.velocity(j)).zip(u).map(|((a, b), c)| (a - b) * c).sum())
}

/// Scales read off the history on `[−τ̄, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialExtremes {
    /// `max_{i,j} max_{s,t} |v_i(s) − v_j(t)|`
    pub d0: f64,
    /// `max_i max_s |v_i(s)|`
    pub r_v0: f64,
    /// `max_i max_s |x_i(s)|`
    pub m_x0: f64,
    pub accepted: bool,
}

pub fn initial_extremes(traj: &Trajectory, cfg: &DiagnosticsConfig) -> Result<InitialExtremes, DiagnosticsError> {
    let w0 = window_diameter_accepted(traj, 0, cfg, 0.0, &[])?;
    let (r_v0, _, acc_v) = windows::history_norm_max(traj, false, cfg);
    let (m_x0, _, acc_x) = windows::history_norm_max(traj, true, cfg);
    Ok(InitialExtremes { d0: w0.dn, r_v0, m_x0, accepted: w0.accepted && acc_v && acc_x })
}

/// Precomputed diagnostics of one trajectory.
///
/// The running maximum of `d_X` is tracked on a fine grid (each mesh cell
/// split into `fine_sub` parts) and interpolated linearly in between, so the
/// interaction radius `A(t) = 2τ̄R_V⁰ + 4M_X⁰ + max_{[−τ̄,t]} d_X` is
/// continuous and nondecreasing. `Φ(t) = ∫_{−τ̄}^t φ` is cumulated per fine
/// cell.
#[derive(Debug, Clone)]
pub struct Diagnostics<'a> {
    traj: &'a Trajectory,
    cfg: DiagnosticsConfig,
    extremes: InitialExtremes,
    floor: WeightFloor<'a>,
    grid: Vec<f64>,
    runmax: Vec<f64>,
    phi_cum: Vec<f64>,
    windows: Vec<WindowExtrema>,
}

impl<'a> Diagnostics<'a> {
    pub fn new(traj: &'a Trajectory, cfg: &DiagnosticsConfig) -> Result<Self, DiagnosticsError> {
        let extremes = initial_extremes(traj, cfg)?;
        let psi = &traj.scenario().influence;
        let tb = traj.tau_bar();
        let floor = WeightFloor::new(psi, psi.sup(), tb);

        let mesh = traj.mesh();
        let sub = cfg.fine_sub.max(1);
        let mut grid = Vec::with_capacity(mesh.len() * sub);
        for w in mesh.windows(2) {
            for k in 0..sub {
                grid.push(w[0] + (w[1] - w[0]) * k as f64 / sub as f64);
            }
        }
        grid.push(traj.t_end());

        let (n, d) = (traj.agents(), traj.dim());
        let mut buf = vec![0.0; 2 * n * d];
        let dx: Vec<f64> = grid
            .iter()
            .map(|&t| {
                traj.eval_unchecked(t, &mut buf);
                pair_max(&buf[..n * d], n, d)
            })
            .collect();
        let runmax: Vec<f64> = dx
            .iter()
            .scan(0.0f64, |m, &v| {
                *m = m.max(v);
                Some(*m)
            })
            .collect();

        let mut out = Self {
            traj,
            cfg: cfg.clone(),
            extremes,
            floor,
            grid,
            runmax,
            phi_cum: Vec::new(),
            windows: Vec::new(),
        };
        let mut cum = Vec::with_capacity(out.grid.len());
        cum.push(0.0);
        for k in 1..out.grid.len() {
            let piece = out.phi_cell(out.grid[k - 1], out.grid[k]);
            cum.push(cum[k - 1] + piece);
        }
        out.phi_cum = cum;

        let n_max = out.window_count();
        let scale = extremes.d0;
        out.windows = (0..=n_max)
            .map(|k| window_diameter_accepted(traj, k, cfg, scale, &cfg.directions))
            .collect::<Result<_, _>>()?;
        Ok(out)
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    pub fn config(&self) -> &DiagnosticsConfig {
        &self.cfg
    }

    pub fn extremes(&self) -> &InitialExtremes {
        &self.extremes
    }

    pub fn floor(&self) -> &WeightFloor<'a> {
        &self.floor
    }

    /// Largest `n` with `nτ̄ ≤ T`.
    pub fn window_count(&self) -> usize {
        let r = self.traj.t_end() / self.traj.tau_bar();
        (r + 1e-9).floor() as usize
    }

    /// Accepted window extrema for `n = 0 ..= window_count()`.
    pub fn windows(&self) -> &[WindowExtrema] {
        &self.windows
    }

    pub fn fine_grid(&self) -> &[f64] {
        &self.grid
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.grid.partition_point(|&g| g <= t);
        k.saturating_sub(1).min(self.grid.len().saturating_sub(2))
    }

    /// `d_X(t)`.
    pub fn dx(&self, t: f64) -> f64 {
        let (n, d) = (self.traj.agents(), self.traj.dim());
        let mut buf = vec![0.0; 2 * n * d];
        self.traj.eval_unchecked(t.clamp(-self.traj.tau_bar(), self.traj.t_end()), &mut buf);
        pair_max(&buf[..n * d], n, d)
    }

    /// `d_V(t)`.
    pub fn dv(&self, t: f64) -> f64 {
        let (n, d) = (self.traj.agents(), self.traj.dim());
        let mut buf = vec![0.0; 2 * n * d];
        self.traj.eval_unchecked(t.clamp(-self.traj.tau_bar(), self.traj.t_end()), &mut buf);
        pair_max(&buf[n * d..], n, d)
    }

    /// Running maximum of `d_X` over `[−τ̄, t]`.
    pub fn dx_runmax(&self, t: f64) -> f64 {
        if self.grid.len() < 2 {
            return self.runmax[0];
        }
        let t = t.clamp(self.grid[0], *self.grid.last().unwrap());
        let k = self.locate(t);
        let (a, b) = (self.grid[k], self.grid[k + 1]);
        let th = ((t - a) / (b - a)).clamp(0.0, 1.0);
        self.runmax[k] + th * (self.runmax[k + 1] - self.runmax[k])
    }

    /// `2τ̄R_V⁰ + 4M_X⁰`.
    pub fn radius_offset(&self) -> f64 {
        2.0 * self.traj.tau_bar() * self.extremes.r_v0 + 4.0 * self.extremes.m_x0
    }

    /// `A(t) = 2τ̄R_V⁰ + 4M_X⁰ + max_{[−τ̄,t]} d_X`.
    pub fn radius(&self, t: f64) -> f64 {
        self.radius_offset() + self.dx_runmax(t)
    }

    /// `ψ_t = min ψ` over `[0, A(t)]`.
    pub fn psi_floor(&self, t: f64) -> f64 {
        self.floor.psi_floor(self.radius(t))
    }

    /// `φ(t) = min{e^{−Kτ̄}ψ_t, e^{−2Kτ̄}/τ̄}`.
    pub fn phi(&self, t: f64) -> f64 {
        self.floor.g(self.radius(t))
    }

    fn phi_cell(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let ga = self.phi(a);
        let gb = self.phi(b);
        if ga == gb {
            return ga * (b - a);
        }
        let f = |s: f64| self.phi(s);
        adaptive_simpson(&f, a, b, self.cfg.quad_rel * self.floor.cap() * (b - a))
    }

    /// `Φ(t) = ∫_{−τ̄}^t φ(s) ds`.
    pub fn phi_cumulative(&self, t: f64) -> f64 {
        let t = t.clamp(self.grid[0], *self.grid.last().unwrap());
        let k = self.locate(t);
        self.phi_cum[k] + self.phi_cell(self.grid[k], t)
    }

    /// `∫_a^b φ(s) ds`.
    pub fn phi_integral(&self, a: f64, b: f64) -> f64 {
        self.phi_cumulative(b) - self.phi_cumulative(a)
    }

    /// Series at every `stride`-th mesh point from `−τ̄` on; the last mesh
    /// point is always included.
    pub fn series(&self, stride: usize) -> DiagnosticsSeries {
        let mesh = self.traj.mesh();
        let stride = stride.max(1);
        let mut idx: Vec<usize> = (0..mesh.len()).step_by(stride).collect();
        if idx.last() != Some(&(mesh.len() - 1)) {
            idx.push(mesh.len() - 1);
        }
        let mut s = DiagnosticsSeries::default();
        for k in idx {
            let t = mesh[k];
            let st = self.traj.state_at_index(k);
            let (n, d) = (self.traj.agents(), self.traj.dim());
            s.t.push(t);
            s.d_x.push(pair_max(&st[..n * d], n, d));
            s.d_v.push(pair_max(&st[n * d..], n, d));
            s.dx_runmax.push(self.dx_runmax(t));
            s.psi_t.push(self.psi_floor(t));
            s.phi.push(self.phi(t));
        }
        s
    }
}

/// Sampled diagnostics, optionally joined with the certificate envelopes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub t: Vec<f64>,
    pub d_x: Vec<f64>,
    pub d_v: Vec<f64>,
    pub dx_runmax: Vec<f64>,
    pub psi_t: Vec<f64>,
    pub phi: Vec<f64>,
    pub envelope: Option<Vec<f64>>,
    pub lyapunov: Option<Vec<f64>>,
    pub decay_bound: Option<Vec<f64>>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}
