//! Communication weight laws `ψ: [0, ∞) → (0, ∞)`.

use serde::{Deserialize, Serialize};

use super::{ModelError, Violation};

/// Distance-dependent influence function.
///
/// Every family is positive, bounded and continuous. The analytic families
/// have `∫₀^∞ ψ = ∞` under their validated parameter ranges; a table carries
/// an explicit attestation of that property instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InfluenceSpec {
    /// `k0 · (1 + r²)^(−beta)`
    CuckerSmale { k0: f64, beta: f64 },
    /// `c`
    Constant { c: f64 },
    /// `base + amp · sin(freq · r)`, non-monotone whenever `amp > 0`.
    Oscillating { base: f64, amp: f64, freq: f64 },
    /// Linear interpolation of `(r, psi)` samples, held constant past the
    /// last knot. The first knot must sit at `r = 0`.
    Table {
        r: Vec<f64>,
        psi: Vec<f64>,
        /// User attestation that the extended profile has a divergent integral.
        #[serde(default)]
        diverges: bool,
    },
}

impl InfluenceSpec {
    /// `ψ(r)`. Negative distances are a domain error.
    pub fn eval(&self, r: f64) -> Result<f64, ModelError> {
        if !(r >= 0.0) {
            return Err(ModelError::Domain(format!("influence queried at r = {r} < 0")));
        }
        Ok(self.value(r))
    }

    /// Unchecked evaluation for `r ≥ 0`; used on hot paths after validation.
    pub(crate) fn value(&self, r: f64) -> f64 {
        match *self {
            InfluenceSpec::CuckerSmale { k0, beta } => k0 * (1.0 + r * r).powf(-beta),
            InfluenceSpec::Constant { c } => c,
            InfluenceSpec::Oscillating { base, amp, freq } => base + amp * (freq * r).sin(),
            InfluenceSpec::Table { r: ref knots, ref psi, .. } => table_interp(knots, psi, r),
        }
    }

    /// `K = sup ψ`, in closed form for the analytic families. For a table the
    /// supremum of the piecewise-linear profile is attained at a knot, so the
    /// knot maximum is exact.
    pub fn sup(&self) -> f64 {
        match *self {
            InfluenceSpec::CuckerSmale { k0, .. } => k0,
            InfluenceSpec::Constant { c } => c,
            InfluenceSpec::Oscillating { base, amp, .. } => base + amp,
            InfluenceSpec::Table { ref psi, .. } => psi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Whether `∫₀^∞ ψ = ∞` holds (analytically, or by attestation for tables).
    pub fn diverges(&self) -> bool {
        match *self {
            InfluenceSpec::CuckerSmale { beta, .. } => beta <= 0.5,
            InfluenceSpec::Constant { .. } | InfluenceSpec::Oscillating { .. } => true,
            InfluenceSpec::Table { diverges, .. } => diverges,
        }
    }

    pub fn is_monotone(&self) -> bool {
        match *self {
            InfluenceSpec::CuckerSmale { .. } | InfluenceSpec::Constant { .. } => true,
            InfluenceSpec::Oscillating { amp, .. } => amp == 0.0,
            InfluenceSpec::Table { ref psi, .. } => psi.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    /// `min_{σ ∈ [0, r]} ψ(σ)`, exact for every family.
    pub fn running_min(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match *self {
            InfluenceSpec::CuckerSmale { .. } | InfluenceSpec::Constant { .. } => self.value(r),
            InfluenceSpec::Oscillating { base, amp, freq } => {
                let x = freq * r;
                if x >= 1.5 * std::f64::consts::PI {
                    base - amp
                } else {
                    // sin ≥ 0 on [0, π] and strictly decreasing on [π, 3π/2]
                    base + amp * x.sin().min(0.0)
                }
            }
            InfluenceSpec::Table { r: ref knots, ref psi, .. } => {
                let mut m = psi[0];
                for (k, &rk) in knots.iter().enumerate() {
                    if rk > r {
                        break;
                    }
                    m = m.min(psi[k]);
                }
                m.min(table_interp(knots, psi, r))
            }
        }
    }

    /// Points in `(a, b)` where the running minimum may lose smoothness.
    /// Quadratures split their panels there.
    pub fn running_min_breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match *self {
            InfluenceSpec::CuckerSmale { .. } | InfluenceSpec::Constant { .. } => {}
            InfluenceSpec::Oscillating { freq, .. } => {
                let pi = std::f64::consts::PI;
                out.extend([pi / freq, 1.5 * pi / freq]);
            }
            InfluenceSpec::Table { r: ref knots, ref psi, .. } => {
                out.extend(knots.iter().copied());
                // crossings of the running minimum inside decreasing segments
                let mut m = psi[0];
                for k in 0..knots.len().saturating_sub(1) {
                    m = m.min(psi[k]);
                    let (p0, p1) = (psi[k], psi[k + 1]);
                    if p1 < m && p0 > m {
                        let frac = (p0 - m) / (p0 - p1);
                        out.push(knots[k] + frac * (knots[k + 1] - knots[k]));
                    }
                }
            }
        }
        out.retain(|&x| x > a && x < b);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Parameter checks for this family. `path` prefixes field names.
    pub fn violations(&self, path: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut bad = |field: &str, msg: String| v.push(Violation::new(format!("{path}.{field}"), msg));
        match *self {
            InfluenceSpec::CuckerSmale { k0, beta } => {
                if !(k0 > 0.0 && k0.is_finite()) {
                    bad("k0", format!("k0 must be positive and finite, got {k0}"));
                }
                if !(beta >= 0.0) {
                    bad("beta", format!("beta must be ≥ 0, got {beta}"));
                } else if beta > 0.5 {
                    bad("beta", format!("∫ψ = ∞ requires beta ≤ 1/2, got {beta}"));
                }
            }
            InfluenceSpec::Constant { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    bad("c", format!("ψ must be positive, got c = {c}"));
                }
            }
            InfluenceSpec::Oscillating { base, amp, freq } => {
                if !(amp >= 0.0 && amp.is_finite()) {
                    bad("amp", format!("amp must be ≥ 0, got {amp}"));
                }
                if !(base > amp && base.is_finite()) {
                    bad("base", format!("ψ must be positive: need base > amp, got base = {base}, amp = {amp}"));
                }
                if !(freq > 0.0 && freq.is_finite()) {
                    bad("freq", format!("freq must be positive, got {freq}"));
                }
            }
            InfluenceSpec::Table { ref r, ref psi, diverges } => {
                if r.len() != psi.len() || r.is_empty() {
                    bad("psi", format!("table needs matching non-empty r/psi ({} vs {})", r.len(), psi.len()));
                    return v;
                }
                if r[0] != 0.0 {
                    bad("r", format!("first knot must be r = 0, got {}", r[0]));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) || r.iter().any(|x| !x.is_finite()) {
                    bad("r", "knots must be finite and strictly increasing".to_string());
                }
                if let Some((k, p)) = psi.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
                    bad(&format!("psi[{k}]"), format!("ψ must be positive, got {p}"));
                }
                if !diverges {
                    bad("diverges", "table influence needs an explicit ∫ψ = ∞ attestation".to_string());
                }
            }
        }
        v
    }
}

fn table_interp(knots: &[f64], psi: &[f64], r: f64) -> f64 {
    let last = knots.len() - 1;
    if r >= knots[last] {
        return psi[last];
    }
    // first knot strictly greater than r
    let hi = knots.partition_point(|&k| k <= r).max(1);
    let lo = hi - 1;
    let w = (r - knots[lo]) / (knots[hi] - knots[lo]);
    psi[lo] + w * (psi[hi] - psi[lo])
}
