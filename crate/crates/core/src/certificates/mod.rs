//! Theory constants, the envelope `𝓓`, the Lyapunov functional `𝓛` and the
//! inequality checks along a computed trajectory.

mod checks;

pub use checks::{CheckRange, CheckResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Diagnostics, DiagnosticsConfig, DiagnosticsError, DiagnosticsSeries};
use crate::integrator::Trajectory;
use crate::model::InfluenceSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertError {
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("divergence condition numerically unattained: no root of the d* relation below z_max = {z_max}")]
    DStarUnattained { z_max: f64 },
}

/// Every slack used by the checks, in one block.
///
/// A check passes when `rhs − lhs ≥ −slack`. Unless stated otherwise the
/// slack is `window_rel · D₀ + abs_floor · max(|lhs|, |rhs|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub window_rel: f64,
    pub abs_floor: f64,
    /// Absolute slack of the delayed-distance bound.
    pub distance_abs: f64,
    /// Absolute slack of the pairwise weight lower bound.
    pub lower_bound_abs: f64,
    /// `𝓛` monotonicity slack, multiplied by `D₀ + 1`.
    pub lyapunov_rel: f64,
    /// Relative slack of the exponential velocity bound.
    pub decay_rel: f64,
    /// Absolute slack of the exponential velocity bound, times `D₀`.
    pub decay_abs_rel: f64,
    /// Relative bisection tolerance for `d*`.
    pub dstar_rel: f64,
    pub z_max: f64,
    /// Random unit directions for the projection check.
    pub projection_directions: usize,
    pub direction_seed: u64,
    pub diagnostics: DiagnosticsConfig,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            window_rel: 1e-8,
            abs_floor: 1e-12,
            distance_abs: 1e-6,
            lower_bound_abs: 1e-9,
            lyapunov_rel: 1e-8,
            decay_rel: 1e-6,
            decay_abs_rel: 1e-9,
            dstar_rel: 1e-10,
            z_max: 1e6,
            projection_directions: 100,
            direction_seed: 0x5eed,
            diagnostics: DiagnosticsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    /// `K = sup ψ`
    pub k: f64,
    pub tau_bar: f64,
    pub d0: f64,
    pub r_v0: f64,
    pub m_x0: f64,
    /// `2τ̄R_V⁰ + 4M_X⁰`
    pub radius_offset: f64,
    /// `𝓛(2τ̄)`
    pub lyapunov_2tau: f64,
    pub d_star: f64,
    /// `min ψ` on `[0, d*]`
    pub psi_star: f64,
    pub phi_star: f64,
    /// Certified decay rate.
    pub c: f64,
}

/// `K = sup ψ`.
pub fn sup_influence(spec: &InfluenceSpec) -> f64 {
    spec.sup()
}

/// `C = (1/(3τ̄)) ln(1/(1 − e^{−Kτ̄}φ*τ̄))`.
pub fn decay_rate(k: f64, tau_bar: f64, phi_star: f64) -> Result<f64, CertError> {
    if !(k > 0.0 && tau_bar > 0.0 && k.is_finite() && tau_bar.is_finite()) {
        return Err(CertError::Domain(format!("need K > 0 and τ̄ > 0, got K = {k}, τ̄ = {tau_bar}")));
    }
    let cap = (-2.0 * k * tau_bar).exp() / tau_bar;
    if !(phi_star > 0.0 && phi_star <= cap * (1.0 + 1e-12)) {
        return Err(CertError::Domain(format!("φ* = {phi_star} outside (0, e^(-2Kτ̄)/τ̄ = {cap}]")));
    }
    let x = (-k * tau_bar).exp() * phi_star * tau_bar;
    Ok(-(-x).ln_1p() / (3.0 * tau_bar))
}

/// Seeded random unit vectors in `R^dim`, uniform on the sphere.
pub fn random_directions(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| unit_vector(&mut rng, dim)).collect()
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|a| a * a).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return v.iter().map(|a| a / n).collect();
        }
    }
}

/// Diagnostics joined with the envelope, the Lyapunov functional and the
/// theory constants.
#[derive(Debug, Clone)]
pub struct Certifier<'a> {
    diag: Diagnostics<'a>,
    tol: Tolerances,
    /// `𝓓(nτ̄)` for `n = 0, 1, …`
    anchors: Vec<f64>,
    constants: TheoryConstants,
}

impl<'a> Certifier<'a> {
    pub fn new(traj: &'a Trajectory, tol: &Tolerances) -> Result<Self, CertError> {
        let mut cfg = tol.diagnostics.clone();
        if cfg.directions.is_empty() && tol.projection_directions > 0 {
            cfg.directions = random_directions(tol.projection_directions, traj.dim(), tol.direction_seed);
        }
        let diag = Diagnostics::new(traj, &cfg)?;
        let ex = *diag.extremes();
        let tb = traj.tau_bar();
        let k = diag.floor().k();
        let discount = diag.floor().discount();

        let segments = (traj.t_end() / tb).ceil() as usize + 1;
        let mut anchors = vec![ex.d0; segments.max(3) + 1];
        for n in 2..anchors.len() - 1 {
            let a = n as f64 * tb;
            let b = ((n + 1) as f64 * tb).min(traj.t_end());
            let factor = if b > a { 1.0 - discount * diag.phi_integral(a, b) } else { 1.0 };
            anchors[n + 1] = anchors[n] * factor.cbrt();
        }

        let mut out = Self {
            diag,
            tol: tol.clone(),
            anchors,
            constants: TheoryConstants {
                k,
                tau_bar: tb,
                d0: ex.d0,
                r_v0: ex.r_v0,
                m_x0: ex.m_x0,
                radius_offset: 0.0,
                lyapunov_2tau: 0.0,
                d_star: 0.0,
                psi_star: 0.0,
                phi_star: 0.0,
                c: 0.0,
            },
        };
        out.constants.radius_offset = out.diag.radius_offset();
        out.constants.lyapunov_2tau = out.lyapunov(2.0 * tb);
        let d_star = out.solve_dstar()?;
        let floor = out.diag.floor();
        out.constants.d_star = d_star;
        out.constants.psi_star = floor.psi_floor(d_star);
        out.constants.phi_star = floor.g(d_star);
        out.constants.c = decay_rate(k, tb, out.constants.phi_star)?;
        Ok(out)
    }

    pub fn diagnostics(&self) -> &Diagnostics<'a> {
        &self.diag
    }

    pub fn constants(&self) -> &TheoryConstants {
        &self.constants
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `𝓓(t)`.
    pub fn envelope(&self, t: f64) -> f64 {
        let tb = self.constants.tau_bar;
        let r = t / tb;
        let m = r.round();
        if (r - m).abs() <= 1e-12 * r.abs().max(1.0) {
            return self.envelope_anchor(m.max(0.0) as usize);
        }
        if r <= 2.0 {
            return self.constants.d0;
        }
        let n = (r.floor() as usize).min(self.anchors.len() - 2);
        let factor = 1.0 - self.diag.floor().discount() * self.diag.phi_integral(n as f64 * tb, t);
        self.anchors[n] * factor.cbrt()
    }

    /// `𝓓(nτ̄)`.
    pub fn envelope_anchor(&self, n: usize) -> f64 {
        self.anchors[n.min(self.anchors.len() - 1)]
    }

    /// `G(A(t))`, the weight-floor integral up to the interaction radius.
    pub fn floor_integral(&self, t: f64) -> f64 {
        self.diag.floor().integral(self.diag.radius(t))
    }

    /// `𝓛(t) = 𝓓(t) + (e^{−Kτ̄}/3)·G(A(t))`.
    pub fn lyapunov(&self, t: f64) -> f64 {
        self.envelope(t) + self.diag.floor().discount() / 3.0 * self.floor_integral(t)
    }

    /// `𝓛` at increasing times, with the integral term accumulated from one
    /// sample to the next.
    pub fn lyapunov_series(&self, times: &[f64]) -> Vec<f64> {
        let floor = self.diag.floor();
        let w = floor.discount() / 3.0;
        let mut out = Vec::with_capacity(times.len());
        let mut prev_r = f64::NAN;
        let mut g = 0.0;
        for &t in times {
            let r = self.diag.radius(t);
            g = if prev_r.is_nan() || r < prev_r { floor.integral(r) } else { g + floor.integral_between(prev_r, r) };
            prev_r = r;
            out.push(self.envelope(t) + w * g);
        }
        out
    }

    /// `D₀e^{−C(t−2τ̄)}`.
    pub fn decay_bound(&self, t: f64) -> f64 {
        let c = &self.constants;
        c.d0 * (-c.c * (t - 2.0 * c.tau_bar)).exp()
    }

    /// Smallest `z ≥ A(2τ̄)` with `G(z) ≥ 3e^{Kτ̄}𝓛(2τ̄)`.
    ///
    /// Since `𝓛(2τ̄) = D₀ + (e^{−Kτ̄}/3)G(A(2τ̄))`, this is the smallest `z`
    /// with `∫_{A(2τ̄)}^z g ≥ 3e^{Kτ̄}D₀`.
    fn solve_dstar(&self) -> Result<f64, CertError> {
        let floor = self.diag.floor();
        let start = self.diag.radius(2.0 * self.constants.tau_bar);
        let need = 3.0 * self.constants.d0 / floor.discount();
        solve_floor_root(floor, start, need, self.tol.dstar_rel, self.tol.z_max)
    }

    /// Diagnostics sampled at every `stride`-th mesh point, joined with
    /// `𝓓`, `𝓛` and the exponential bound.
    pub fn series(&self, stride: usize) -> DiagnosticsSeries {
        let mut s = self.diag.series(stride);
        s.envelope = Some(s.t.iter().map(|&t| self.envelope(t)).collect());
        s.lyapunov = Some(self.lyapunov_series(&s.t));
        s.decay_bound = Some(s.t.iter().map(|&t| self.decay_bound(t)).collect());
        s
    }

    pub fn report(&self) -> CertificateReport {
        checks::run(self)
    }
}

/// Smallest `z ≥ start` with `∫_start^z g ≥ need`, by doubling and bisection.
pub fn solve_floor_root(floor: &crate::diagnostics::WeightFloor, start: f64, need: f64, rel: f64, z_max: f64) -> Result<f64, CertError> {
    if need <= 0.0 {
        return Ok(start);
    }
    let mut lo = start;
    let mut acc_lo = 0.0;
    let mut step = start.max(1.0);
    let hi = loop {
        let hi = start + step;
        if hi > z_max {
            let last = z_max;
            let acc = acc_lo + floor.integral_between(lo, last);
            if acc >= need && last > lo {
                break last;
            }
            return Err(CertError::DStarUnattained { z_max });
        }
        let acc = acc_lo + floor.integral_between(lo, hi);
        if acc >= need {
            break hi;
        }
        lo = hi;
        acc_lo = acc;
        step *= 2.0;
    };
    let mut hi = hi;
    let tol = rel.min(1e-13);
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let acc = acc_lo + floor.integral_between(lo, mid);
        if acc >= need {
            hi = mid;
        } else {
            lo = mid;
            acc_lo = acc;
        }
    }
    Ok(hi)
}

/// Machine-readable outcome of a certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub constants: TheoryConstants,
    pub checks: Vec<CheckResult>,
    pub meta: ReportMeta,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `0` when every check passes, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub scenario: String,
    pub fingerprint: String,
    pub horizon: f64,
    pub partial: bool,
    pub all_pass: bool,
    pub grids: GridMeta,
    pub tolerances: Tolerances,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub dt: f64,
    pub mesh_points: usize,
    pub fine_grid_points: usize,
    pub window_samples: Vec<usize>,
    pub windows_accepted: bool,
    pub initial_extremes_accepted: bool,
}

/// Builds the certifier and runs every check.
pub fn certify(traj: &Trajectory, tol: &Tolerances) -> Result<CertificateReport, CertError> {
    Ok(Certifier::new(traj, tol)?.report())
}
