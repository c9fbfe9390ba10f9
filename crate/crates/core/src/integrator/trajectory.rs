use crate::model::ScenarioSpec;

use super::IntegrateError;

/// Positions and velocities of all agents at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub agents: usize,
    pub dim: usize,
    /// Row-major `N × d` positions.
    pub x: Vec<f64>,
    /// Row-major `N × d` velocities.
    pub v: Vec<f64>,
}

impl PhaseState {
    pub fn from_flat(t: f64, agents: usize, dim: usize, flat: &[f64]) -> Self {
        let (x, v) = flat.split_at(agents * dim);
        Self { t, agents, dim, x: x.to_vec(), v: v.to_vec() }
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.v[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|z| z.is_finite())
    }
}

/// Cubic Hermite interpolant on one mesh interval.
#[derive(Debug, Clone)]
pub(crate) struct HermiteCell {
    pub t0: f64,
    pub h: f64,
    pub y0: Vec<f64>,
    pub f0: Vec<f64>,
    pub y1: Vec<f64>,
    pub f1: Vec<f64>,
}

impl HermiteCell {
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        hermite_into(self.t0, self.h, &self.y0, &self.f0, &self.y1, &self.f1, t, out);
    }
}

/// Evaluates the cubic through `(y0, f0)` at `t0` and `(y1, f1)` at `t0 + h`.
/// Written in increments from `y0` so that a constant segment is reproduced
/// exactly. Also used for extrapolation past the cell.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn hermite_into(t0: f64, h: f64, y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64], t: f64, out: &mut [f64]) {
    let th = (t - t0) / h;
    let th2 = th * th;
    let th3 = th2 * th;
    for c in 0..out.len() {
        let dy = y1[c] - y0[c];
        let (hf0, hf1) = (h * f0[c], h * f1[c]);
        out[c] = y0[c] + th * hf0 + th2 * (3.0 * dy - 2.0 * hf0 - hf1) + th3 * (hf0 + hf1 - 2.0 * dy);
    }
}

/// Solution of the delayed system on `[−τ̄, T]`.
///
/// Mesh points on `[−τ̄, 0)` carry history samples only; queries there go to
/// the history law itself. From `t = 0` on, every mesh point stores the state
/// and its time derivative, and consecutive points define a cubic Hermite cell.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub(crate) scenario: ScenarioSpec,
    pub(crate) mesh: Vec<f64>,
    pub(crate) states: Vec<f64>,
    /// Derivatives for mesh points from `live_start` on.
    pub(crate) slopes: Vec<f64>,
    pub(crate) live_start: usize,
    pub(crate) width: usize,
}

impl Trajectory {
    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    /// Index of the mesh point `t = 0`.
    pub fn live_start(&self) -> usize {
        self.live_start
    }

    pub fn tau_bar(&self) -> f64 {
        self.scenario.tau_bar
    }

    pub fn t_end(&self) -> f64 {
        *self.mesh.last().expect("mesh is never empty")
    }

    pub fn agents(&self) -> usize {
        self.scenario.agents
    }

    pub fn dim(&self) -> usize {
        self.scenario.dim
    }

    /// Flat state `[x, v]` stored at mesh index `k`.
    pub fn state_at_index(&self, k: usize) -> &[f64] {
        &self.states[k * self.width..(k + 1) * self.width]
    }

    pub(crate) fn slope_at_index(&self, k: usize) -> &[f64] {
        let j = k - self.live_start;
        &self.slopes[j * self.width..(j + 1) * self.width]
    }

    pub fn phase_state_at_index(&self, k: usize) -> PhaseState {
        PhaseState::from_flat(self.mesh[k], self.agents(), self.dim(), self.state_at_index(k))
    }

    /// State at any `t ∈ [−τ̄, T]`.
    pub fn query(&self, t: f64) -> Result<PhaseState, IntegrateError> {
        let mut buf = vec![0.0; self.width];
        self.eval_into(t, &mut buf)?;
        Ok(PhaseState::from_flat(t, self.agents(), self.dim(), &buf))
    }

    /// Writes the flat state at `t` into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrateError> {
        let tb = self.scenario.tau_bar;
        if !(t >= -tb && t <= self.t_end()) {
            return Err(IntegrateError::OutOfRange { t, lo: -tb, hi: self.t_end() });
        }
        self.eval_unchecked(t, out);
        Ok(())
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64, out: &mut [f64]) {
        if t < 0.0 {
            self.scenario.history.state_into(t, self.scenario.dim, out);
            return;
        }
        let live = &self.mesh[self.live_start..];
        // first live index with mesh time > t
        let hi = live.partition_point(|&m| m <= t);
        let k = self.live_start + hi.saturating_sub(1);
        if self.mesh[k] == t || k + 1 >= self.mesh.len() {
            out.copy_from_slice(self.state_at_index(k));
            return;
        }
        self.eval_cell(k, t, out);
    }

    /// Evaluates the Hermite cubic of live cell `[t_k, t_{k+1}]` at `t`
    /// (extrapolating when `t` lies outside the cell).
    pub(crate) fn eval_cell(&self, k: usize, t: f64, out: &mut [f64]) {
        let h = self.mesh[k + 1] - self.mesh[k];
        hermite_into(
            self.mesh[k],
            h,
            self.state_at_index(k),
            self.slope_at_index(k),
            self.state_at_index(k + 1),
            self.slope_at_index(k + 1),
            t,
            out,
        );
    }

    /// Velocity of agent `i` at `t`, for callers that need a single agent.
    pub fn velocity_into(&self, i: usize, t: f64, scratch: &mut [f64], out: &mut [f64]) {
        self.eval_unchecked(t, scratch);
        let nd = self.agents() * self.dim();
        let d = self.dim();
        out.copy_from_slice(&scratch[nd + i * d..nd + (i + 1) * d]);
    }

    /// Negative-control fixture: the same trajectory with every state on
    /// `t > 0` multiplied by `e^{rate·t}` (positions and velocities alike).
    /// The history part is untouched. Dense output stays consistent because
    /// slopes are transformed by the product rule.
    pub fn with_exponential_growth(&self, rate: f64) -> Trajectory {
        let mut out = self.clone();
        let w = self.width;
        for k in self.live_start..self.mesh.len() {
            let t = self.mesh[k];
            let g = (rate * t).exp();
            let j = k - self.live_start;
            for c in 0..w {
                let y = self.states[k * w + c];
                let f = self.slopes[j * w + c];
                out.states[k * w + c] = g * y;
                out.slopes[j * w + c] = g * (f + rate * y);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic() {
        // y = t³ − 2t + 1 on [0.5, 0.8]
        let y = |t: f64| t * t * t - 2.0 * t + 1.0;
        let f = |t: f64| 3.0 * t * t - 2.0;
        let (a, b) = (0.5, 0.8);
        let mut out = [0.0];
        for k in 0..=10 {
            let t = a + (b - a) * k as f64 / 10.0;
            hermite_into(a, b - a, &[y(a)], &[f(a)], &[y(b)], &[f(b)], t, &mut out);
            assert!((out[0] - y(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn hermite_constant_segment_exact() {
        let w = 0.1f64 * 3.0;
        let mut out = [0.0];
        for k in 0..=20 {
            let t = 1.0 + k as f64 / 20.0 * 0.37;
            hermite_into(1.0, 0.37, &[w], &[0.0], &[w], &[0.0], t, &mut out);
            assert_eq!(out[0], w);
        }
    }
}
