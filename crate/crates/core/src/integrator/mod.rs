//! Method-of-steps integration of the delayed flocking system.
//!
//! Classical RK4 over a fixed mesh. Delayed states `y(t − τ(t))` are read
//! from the already computed dense output. When the lag is shorter than the
//! current step the lookup lands inside the step being computed; the step is
//! then taken once with a provisional interpolant and re-evaluated once with
//! the Hermite cubic built from that first pass.

mod trajectory;

pub use trajectory::{PhaseState, Trajectory};
pub(crate) use trajectory::HermiteCell;

use crate::model::{DelaySpec, InfluenceSpec, ModelError, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("query at t = {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("delayed lookup at t = {at} outside the computed history [{lo}, {frontier}]")]
    HistoryGap { at: f64, lo: f64, frontier: f64 },
    #[error("solution blew up after t = {last_good_time}: {reason}")]
    BlowUp { last_good_time: f64, reason: String },
    #[error("trajectory already reaches the horizon")]
    Finished,
}

/// Velocities larger than this multiple of the initial speed bound abort the
/// run; the exact solution never leaves the initial speed ball.
pub const BLOW_UP_FACTOR: f64 = 1.0e3;

/// Read access to the solution strictly behind the integration frontier,
/// optionally extended by a provisional interpolant for the step in progress.
pub struct HistoryAccessor<'a> {
    traj: &'a Trajectory,
    provisional: Option<&'a HermiteCell>,
}

impl<'a> HistoryAccessor<'a> {
    pub fn new(traj: &'a Trajectory) -> Self {
        Self { traj, provisional: None }
    }

    fn with_provisional(traj: &'a Trajectory, cell: &'a HermiteCell) -> Self {
        Self { traj, provisional: Some(cell) }
    }

    pub fn frontier(&self) -> f64 {
        self.traj.t_end()
    }

    /// Flat state at `s`. Lookups beyond the frontier are only allowed when a
    /// provisional interpolant covers them.
    pub fn state_into(&self, s: f64, out: &mut [f64]) -> Result<(), IntegrateError> {
        let tb = self.traj.tau_bar();
        let frontier = self.frontier();
        let slop = 1e-12 * (1.0 + frontier.abs());
        if s < -tb - slop {
            return Err(IntegrateError::HistoryGap { at: s, lo: -tb, frontier });
        }
        if s <= frontier {
            self.traj.eval_unchecked(s.max(-tb), out);
            return Ok(());
        }
        match self.provisional {
            Some(cell) => {
                cell.eval_into(s, out);
                Ok(())
            }
            None if s - frontier <= slop => {
                self.traj.eval_unchecked(frontier, out);
                Ok(())
            }
            None => Err(IntegrateError::HistoryGap { at: s, lo: -tb, frontier }),
        }
    }
}

/// Scenario data needed on every right-hand-side evaluation.
struct Field<'a> {
    agents: usize,
    dim: usize,
    psi: &'a InfluenceSpec,
    delay: DelaySpec,
}

impl Field<'_> {
    /// `out ← (V, dV/dt)` for state `y` at time `t`; `delayed` is scratch.
    fn eval(&self, t: f64, y: &[f64], hist: &HistoryAccessor, delayed: &mut [f64], out: &mut [f64]) -> Result<(), IntegrateError> {
        let (n, d) = (self.agents, self.dim);
        let nd = n * d;
        let tau = self.delay.value(t.max(0.0));
        let lagged: &[f64] = if tau == 0.0 {
            y
        } else {
            hist.state_into(t - tau, delayed)?;
            delayed
        };
        let (x, v) = y.split_at(nd);
        let (xl, vl) = lagged.split_at(nd);
        let (dx, dv) = out.split_at_mut(nd);
        dx.copy_from_slice(v);
        let inv = 1.0 / (n as f64 - 1.0);
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            let vi = &v[i * d..(i + 1) * d];
            let acc = &mut dv[i * d..(i + 1) * d];
            acc.fill(0.0);
            for j in (0..n).filter(|&j| j != i) {
                let xj = &xl[j * d..(j + 1) * d];
                let vj = &vl[j * d..(j + 1) * d];
                let r = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let w = self.psi.value(r);
                for c in 0..d {
                    acc[c] += w * (vj[c] - vi[c]);
                }
            }
            for a in acc.iter_mut() {
                *a *= inv;
            }
        }
        Ok(())
    }
}

/// Right-hand side of the delayed system at `(t, y)`: returns the flat
/// derivative `[dX/dt, dV/dt]`.
pub fn rhs(scenario: &ScenarioSpec, t: f64, y: &[f64], hist: &HistoryAccessor) -> Result<Vec<f64>, IntegrateError> {
    if !(t >= 0.0) {
        return Err(ModelError::Domain(format!("right-hand side evaluated at t = {t} < 0")).into());
    }
    let field = Field { agents: scenario.agents, dim: scenario.dim, psi: &scenario.influence, delay: scenario.delay_spec() };
    let mut delayed = vec![0.0; y.len()];
    let mut out = vec![0.0; y.len()];
    field.eval(t, y, hist, &mut delayed, &mut out)?;
    Ok(out)
}

/// Live mesh `0 = t_0 < … < t_M = T`: multiples of `dt`, plus multiples of
/// `τ̄` and of a constant lag so that window edges and derivative breakpoints
/// are mesh points. Near-coincident points collapse onto the breakpoint.
pub fn mesh_plan(t_end: f64, dt: f64, tau_bar: f64, lag: Option<f64>) -> Vec<f64> {
    let mut pts: Vec<(f64, bool)> = Vec::new();
    let steps = (t_end / dt).ceil() as usize + 1;
    pts.extend((0..=steps).map(|j| j as f64 * dt).filter(|&t| t < t_end).map(|t| (t, false)));
    let mut add_multiples = |step: f64| {
        let count = (t_end / step).floor() as usize;
        pts.extend((1..=count).map(|m| m as f64 * step).filter(|&t| t < t_end).map(|t| (t, true)));
    };
    add_multiples(tau_bar);
    if let Some(l) = lag.filter(|&l| l >= dt) {
        add_multiples(l);
    }
    pts.push((t_end, true));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let snap = 1e-9 * dt;
    let mut mesh: Vec<(f64, bool)> = Vec::with_capacity(pts.len());
    for (t, is_break) in pts {
        match mesh.last_mut() {
            Some(last) if t - last.0 <= snap => {
                // keep t = 0 and prefer breakpoints over plain grid points
                if is_break && !last.1 && last.0 != 0.0 {
                    *last = (t, true);
                }
            }
            _ => mesh.push((t, is_break)),
        }
    }
    mesh.into_iter().map(|(t, _)| t).collect()
}

impl Trajectory {
    /// History part on `[−τ̄, 0]` plus the initial point `t = 0` with its
    /// derivative. Further steps extend it.
    pub fn start(scenario: &ScenarioSpec) -> Result<Trajectory, IntegrateError> {
        let scenario = scenario.validate()?;
        let tb = scenario.tau_bar;
        let width = scenario.state_len();
        let cells = ((tb / scenario.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut mesh: Vec<f64> = (0..cells).map(|k| -tb * (1.0 - k as f64 / cells as f64)).collect();
        mesh.push(0.0);
        let mut states = vec![0.0; mesh.len() * width];
        for (k, &s) in mesh.iter().enumerate() {
            scenario.history.state_into(s, scenario.dim, &mut states[k * width..(k + 1) * width]);
        }
        let live_start = mesh.len() - 1;
        let mut traj = Trajectory { scenario, mesh, states, slopes: Vec::new(), live_start, width };
        let y0 = traj.state_at_index(live_start).to_vec();
        let f0 = rhs(&traj.scenario, 0.0, &y0, &HistoryAccessor::new(&traj))?;
        traj.slopes = f0;
        Ok(traj)
    }

    /// Advances the frontier by one RK4 step of length `dt`.
    pub fn step(&mut self, dt: f64) -> Result<(), IntegrateError> {
        if !(dt > 0.0 && dt <= self.scenario.tau_bar * (1.0 + 1e-12)) {
            return Err(ModelError::Domain(format!("step {dt} outside (0, tau_bar]")).into());
        }
        let t0 = self.t_end();
        let (y1, f1) = self.advance(t0, dt)?;
        let speed_cap = BLOW_UP_FACTOR * self.initial_speed_bound();
        let nd = self.agents() * self.dim();
        let finite = y1.iter().chain(&f1).all(|z| z.is_finite());
        let too_fast = (0..self.agents()).any(|i| {
            let v = &y1[nd + i * self.dim()..nd + (i + 1) * self.dim()];
            v.iter().map(|c| c * c).sum::<f64>().sqrt() > speed_cap
        });
        if !finite || too_fast {
            let reason = if finite { format!("speed above {BLOW_UP_FACTOR}·R_V0") } else { "non-finite state".to_string() };
            return Err(IntegrateError::BlowUp { last_good_time: t0, reason });
        }
        self.mesh.push(t0 + dt);
        self.states.extend_from_slice(&y1);
        self.slopes.extend_from_slice(&f1);
        Ok(())
    }

    /// Largest history speed over the stored history samples.
    fn initial_speed_bound(&self) -> f64 {
        let nd = self.agents() * self.dim();
        let d = self.dim();
        (0..=self.live_start)
            .flat_map(|k| {
                let y = self.state_at_index(k);
                (0..self.agents()).map(move |i| y[nd + i * d..nd + (i + 1) * d].iter().map(|c| c * c).sum::<f64>().sqrt())
            })
            .fold(0.0, f64::max)
    }

    /// One step from the frontier: new state and its derivative.
    fn advance(&self, t0: f64, h: f64) -> Result<(Vec<f64>, Vec<f64>), IntegrateError> {
        let field = Field {
            agents: self.agents(),
            dim: self.dim(),
            psi: &self.scenario.influence,
            delay: self.scenario.delay_spec(),
        };
        let k_last = self.mesh.len() - 1;
        let y0 = self.state_at_index(k_last).to_vec();
        let f0 = self.slope_at_index(k_last).to_vec();
        let overlaps = [0.5, 1.0].iter().any(|c| {
            let s = t0 + c * h;
            let tau = field.delay.value(s);
            tau != 0.0 && s - tau > t0
        });
        if !overlaps {
            let acc = HistoryAccessor::new(self);
            return rk4(&field, t0, h, &y0, &f0, &acc);
        }
        // first pass: extend the previous live cell, or a tangent line at t = 0
        let first = if k_last > self.live_start {
            let km = k_last - 1;
            HermiteCell {
                t0: self.mesh[km],
                h: self.mesh[k_last] - self.mesh[km],
                y0: self.state_at_index(km).to_vec(),
                f0: self.slope_at_index(km).to_vec(),
                y1: y0.clone(),
                f1: f0.clone(),
            }
        } else {
            let y1: Vec<f64> = y0.iter().zip(&f0).map(|(y, f)| y + h * f).collect();
            HermiteCell { t0, h, y0: y0.clone(), f0: f0.clone(), y1, f1: f0.clone() }
        };
        let (y1, f1) = rk4(&field, t0, h, &y0, &f0, &HistoryAccessor::with_provisional(self, &first))?;
        let second = HermiteCell { t0, h, y0: y0.clone(), f0: f0.clone(), y1, f1 };
        rk4(&field, t0, h, &y0, &f0, &HistoryAccessor::with_provisional(self, &second))
    }
}

fn rk4(field: &Field, t0: f64, h: f64, y0: &[f64], f0: &[f64], acc: &HistoryAccessor) -> Result<(Vec<f64>, Vec<f64>), IntegrateError> {
    let m = y0.len();
    let mut delayed = vec![0.0; m];
    let mut stage = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    for c in 0..m {
        stage[c] = y0[c] + 0.5 * h * f0[c];
    }
    field.eval(t0 + 0.5 * h, &stage, acc, &mut delayed, &mut k2)?;
    for c in 0..m {
        stage[c] = y0[c] + 0.5 * h * k2[c];
    }
    field.eval(t0 + 0.5 * h, &stage, acc, &mut delayed, &mut k3)?;
    for c in 0..m {
        stage[c] = y0[c] + h * k3[c];
    }
    let t1 = t0 + h;
    field.eval(t1, &stage, acc, &mut delayed, &mut k4)?;
    let y1: Vec<f64> = (0..m).map(|c| y0[c] + h / 6.0 * (f0[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])).collect();
    let mut f1 = vec![0.0; m];
    field.eval(t1, &y1, acc, &mut delayed, &mut f1)?;
    Ok((y1, f1))
}

/// Integrates a scenario over `[0, T]` on the mesh from [`mesh_plan`].
pub fn integrate(scenario: &ScenarioSpec) -> Result<Trajectory, IntegrateError> {
    let mut traj = Trajectory::start(scenario)?;
    let sc = traj.scenario();
    let plan = mesh_plan(sc.horizon(), sc.dt, sc.tau_bar, sc.delay_spec().constant_lag());
    for w in plan.windows(2) {
        let t0 = traj.t_end();
        traj.step(w[1] - t0)?;
        // land exactly on the planned mesh point
        let last = traj.mesh.len() - 1;
        traj.mesh[last] = w[1];
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_is_uniform_when_dt_divides_tau_bar() {
        let m = mesh_plan(2.0, 0.25, 1.0, None);
        assert_eq!(m, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
    }

    #[test]
    fn mesh_inserts_window_edges() {
        let m = mesh_plan(2.0, 0.3, 0.7, None);
        for edge in [0.7, 1.4] {
            assert!(m.contains(&edge), "{m:?}");
        }
        assert_eq!(*m.last().unwrap(), 2.0);
        assert!(m.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.3 + 1e-15));
    }

    #[test]
    fn mesh_clips_last_step() {
        let m = mesh_plan(1.05, 0.1, 2.0, None);
        assert_eq!(m.len(), 12);
        assert!((m[11] - m[10] - 0.05).abs() < 1e-12);
    }
}
