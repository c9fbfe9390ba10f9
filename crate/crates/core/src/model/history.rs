//! Initial history `x_i⁰, v_i⁰ : [−τ̄, 0] → R^d`.

use serde::{Deserialize, Serialize};

use super::{ModelError, Violation};

/// One vector-valued path on the history interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PathLaw {
    Constant { value: Vec<f64> },
    /// `at_zero + s · slope`
    Linear { at_zero: Vec<f64>, slope: Vec<f64> },
    /// Natural cubic spline through the samples.
    Sampled(SampledPath),
}

impl PathLaw {
    pub fn dim(&self) -> usize {
        match self {
            PathLaw::Constant { value } => value.len(),
            PathLaw::Linear { at_zero, .. } => at_zero.len(),
            PathLaw::Sampled(p) => p.values.first().map_or(0, Vec::len),
        }
    }

    /// Writes the path value at `s` into `out`.
    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        match self {
            PathLaw::Constant { value } => out.copy_from_slice(value),
            PathLaw::Linear { at_zero, slope } => {
                for ((o, a), b) in out.iter_mut().zip(at_zero).zip(slope) {
                    *o = a + s * b;
                }
            }
            PathLaw::Sampled(p) => p.eval_into(s, out),
        }
    }

    fn violations(&self, path: &str, dim: usize, tau_bar: f64) -> Vec<Violation> {
        let mut v = Vec::new();
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            PathLaw::Constant { value } => {
                if value.len() != dim || !finite(value) {
                    v.push(Violation::new(path, format!("need {dim} finite components")));
                }
            }
            PathLaw::Linear { at_zero, slope } => {
                if at_zero.len() != dim || slope.len() != dim || !finite(at_zero) || !finite(slope) {
                    v.push(Violation::new(path, format!("need {dim} finite components in at_zero and slope")));
                }
            }
            PathLaw::Sampled(p) => {
                let t = &p.times;
                let scale = tau_bar.max(1.0);
                if t.len() < 2 || (t[0] + tau_bar).abs() > 1e-12 * scale || t[t.len() - 1].abs() > 1e-12 * scale {
                    v.push(Violation::new(format!("{path}.times"), format!("samples must span exactly [-{tau_bar}, 0]")));
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) {
                    v.push(Violation::new(format!("{path}.times"), "sample times must be strictly increasing".to_string()));
                }
                if p.values.len() != t.len() || p.values.iter().any(|x| x.len() != dim || !finite(x)) {
                    v.push(Violation::new(format!("{path}.values"), format!("need one finite {dim}-vector per sample time")));
                }
            }
        }
        v
    }
}

/// Sampled path with precomputed natural-spline second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledRaw", into = "SampledRaw")]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SampledRaw {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl From<SampledPath> for SampledRaw {
    fn from(p: SampledPath) -> Self {
        SampledRaw { times: p.times, values: p.values }
    }
}

impl TryFrom<SampledRaw> for SampledPath {
    type Error = String;
    fn try_from(raw: SampledRaw) -> Result<Self, String> {
        SampledPath::new(raw.times, raw.values)
    }
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, String> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(format!("sampled path needs ≥ 2 samples and one value per time ({} times, {} values)", times.len(), values.len()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("sampled path times must be strictly increasing".to_string());
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err("sampled path values must share one dimension".to_string());
        }
        let second = (0..dim)
            .map(|c| {
                let ys: Vec<f64> = values.iter().map(|v| v[c]).collect();
                natural_spline_second_derivatives(&times, &ys)
            })
            .collect::<Vec<_>>();
        // store as [sample][component]
        let second = (0..times.len()).map(|k| second.iter().map(|col| col[k]).collect()).collect();
        Ok(Self { times, values, second })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn eval_into(&self, s: f64, out: &mut [f64]) {
        let t = &self.times;
        let n = t.len();
        let s = s.clamp(t[0], t[n - 1]);
        let hi = t.partition_point(|&x| x <= s).clamp(1, n - 1);
        let lo = hi - 1;
        if s == t[lo] {
            out.copy_from_slice(&self.values[lo]);
            return;
        }
        let h = t[hi] - t[lo];
        let a = (t[hi] - s) / h;
        let b = (s - t[lo]) / h;
        for c in 0..out.len() {
            let (y0, y1) = (self.values[lo][c], self.values[hi][c]);
            let (m0, m1) = (self.second[lo][c], self.second[hi][c]);
            out[c] = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        }
    }
}

/// Second derivatives of the natural cubic spline (zero at both ends),
/// from the standard tridiagonal system.
fn natural_spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    // Thomas algorithm over the interior unknowns 1..n-1
    for i in 2..n - 1 {
        let w = (x[i] - x[i - 1]) / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[n - 2] = rhs[n - 2] / diag[n - 2];
    for i in (1..n - 2).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentHistory {
    pub position: PathLaw,
    pub velocity: PathLaw,
}

/// Per-agent history laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HistorySpec {
    pub agents: Vec<AgentHistory>,
}

impl HistorySpec {
    pub fn new(agents: Vec<AgentHistory>) -> Self {
        Self { agents }
    }

    /// Position and velocity of agent `i` at `s ∈ [−τ̄, 0]`.
    pub fn eval(&self, i: usize, s: f64, tau_bar: f64) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        let agent = self
            .agents
            .get(i)
            .ok_or_else(|| ModelError::Index(format!("agent {i} out of range (N = {})", self.agents.len())))?;
        if !(s >= -tau_bar && s <= 0.0) {
            return Err(ModelError::Domain(format!("history queried at s = {s} outside [-{tau_bar}, 0]")));
        }
        let mut x = vec![0.0; agent.position.dim()];
        let mut v = vec![0.0; agent.velocity.dim()];
        agent.position.eval_into(s, &mut x);
        agent.velocity.eval_into(s, &mut v);
        Ok((x, v))
    }

    /// Writes the full phase state `[x_0 … x_{N−1}, v_0 … v_{N−1}]` at `s`.
    pub(crate) fn state_into(&self, s: f64, dim: usize, out: &mut [f64]) {
        let n = self.agents.len();
        let (xs, vs) = out.split_at_mut(n * dim);
        for (i, a) in self.agents.iter().enumerate() {
            a.position.eval_into(s, &mut xs[i * dim..(i + 1) * dim]);
            a.velocity.eval_into(s, &mut vs[i * dim..(i + 1) * dim]);
        }
    }

    pub fn violations(&self, path: &str, agents: usize, dim: usize, tau_bar: f64) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.agents.len() != agents {
            v.push(Violation::new(path, format!("need one history entry per agent ({agents}), got {}", self.agents.len())));
        }
        for (i, a) in self.agents.iter().enumerate() {
            v.extend(a.position.violations(&format!("{path}[{i}].position"), dim, tau_bar));
            v.extend(a.velocity.violations(&format!("{path}[{i}].velocity"), dim, tau_bar));
        }
        v
    }
}
