use crate::model::InfluenceSpec;
use crate::quad::piecewise_simpson;

/// The delay-discounted weight floor
/// `g(r) = min{ e^{−Kτ̄} · min_{σ≤r} ψ(σ), e^{−2Kτ̄}/τ̄ }`
/// and its primitive `G(z) = ∫₀^z g`.
///
/// `φ(t)` is `g` evaluated at the running interaction radius, and the
/// Lyapunov functional integrates `g` up to that radius.
#[derive(Debug, Clone)]
pub struct WeightFloor<'a> {
    psi: &'a InfluenceSpec,
    k: f64,
    tau_bar: f64,
    scale: f64,
    cap: f64,
    /// Below this radius `g` equals `cap`.
    r_cross: f64,
}

const REL_TOL: f64 = 1e-14;

impl<'a> WeightFloor<'a> {
    pub fn new(psi: &'a InfluenceSpec, k: f64, tau_bar: f64) -> Self {
        let scale = (-k * tau_bar).exp();
        let cap = (-2.0 * k * tau_bar).exp() / tau_bar;
        let r_cross = crossover(psi, scale, cap);
        Self { psi, k, tau_bar, scale, cap, r_cross }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn tau_bar(&self) -> f64 {
        self.tau_bar
    }

    /// `e^{−Kτ̄}`
    pub fn discount(&self) -> f64 {
        self.scale
    }

    /// `e^{−2Kτ̄}/τ̄`
    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn crossover_radius(&self) -> f64 {
        self.r_cross
    }

    pub fn influence(&self) -> &InfluenceSpec {
        self.psi
    }

    /// `min ψ` over `[0, r]`.
    pub fn psi_floor(&self, r: f64) -> f64 {
        self.psi.running_min(r)
    }

    pub fn g(&self, r: f64) -> f64 {
        if r <= self.r_cross {
            self.cap
        } else {
            (self.scale * self.psi.running_min(r)).min(self.cap)
        }
    }

    /// `G(z) = ∫₀^z g(r) dr`.
    pub fn integral(&self, z: f64) -> f64 {
        self.integral_between(0.0, z)
    }

    /// `∫_a^b g(r) dr` for `0 ≤ a ≤ b`.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let flat_end = self.r_cross.min(b);
        let mut total = if flat_end > a { self.cap * (flat_end - a) } else { 0.0 };
        let lo = a.max(self.r_cross);
        if b > lo {
            total += self.tail(lo, b);
        }
        total
    }

    /// `∫ g` over `[lo, hi]` where `g = e^{−Kτ̄}·min ψ`. Panels grow
    /// geometrically so long ranges keep resolution near `lo`.
    fn tail(&self, lo: f64, hi: f64) -> f64 {
        let f = |r: f64| self.g(r);
        let breaks = self.psi.running_min_breakpoints(lo, hi);
        let mut total = 0.0;
        let mut a = lo;
        let mut width = 1.0f64.max(lo * 0.5).min(hi - lo);
        while a < hi {
            let b = (a + width).min(hi);
            let inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
            let tol = REL_TOL * (b - a) * self.cap;
            total += piecewise_simpson(&f, a, b, &inner, tol);
            a = b;
            width *= 2.0;
        }
        total
    }
}

/// `sup { r : scale · min_{[0,r]} ψ ≥ cap }`, or `∞` when the floor never
/// drops below the cap.
fn crossover(psi: &InfluenceSpec, scale: f64, cap: f64) -> f64 {
    let above = |r: f64| scale * psi.running_min(r) >= cap;
    if !above(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while above(hi) {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    let mut lo = if hi > 1.0 { hi * 0.5 } else { 0.0 };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_influence_is_flat() {
        let psi = InfluenceSpec::Constant { c: 1.0 };
        for tb in [0.5, 1.0, 3.0] {
            let f = WeightFloor::new(&psi, 1.0, tb);
            let g = (-tb).exp().min((-2.0 * tb).exp() / tb);
            assert!((f.g(7.0) - g).abs() < 1e-16);
            assert!((f.integral(12.5) - 12.5 * g).abs() < 1e-13 * g * 12.5);
        }
    }

    #[test]
    fn cucker_smale_primitive_matches_asinh() {
        // beta = 1/2: ∫ k0 (1+r²)^(-1/2) = k0 asinh(r)
        let psi = InfluenceSpec::CuckerSmale { k0: 1.0, beta: 0.5 };
        let f = WeightFloor::new(&psi, 1.0, 1.0);
        let rc = f.crossover_radius();
        // e^{-1}(1+rc²)^{-1/2} = e^{-2}  =>  rc = sqrt(e² − 1)
        let rc_exact = (1f64.exp().powi(2) - 1.0).sqrt();
        assert!((rc - rc_exact).abs() < 1e-12, "{rc} vs {rc_exact}");
        for z in [1.0, 5.0, 40.0, 3000.0, 1e6] {
            let exact = if z <= rc_exact {
                f.cap() * z
            } else {
                f.cap() * rc_exact + f.discount() * (z.asinh() - rc_exact.asinh())
            };
            let got = f.integral(z);
            assert!(((got - exact) / exact).abs() < 1e-10, "z = {z}: {got} vs {exact}");
        }
    }

    #[test]
    fn g_is_nonincreasing_and_capped() {
        let psi = InfluenceSpec::Oscillating { base: 0.5, amp: 0.25, freq: 2.0 };
        let f = WeightFloor::new(&psi, 0.75, 1.0);
        let mut prev = f64::INFINITY;
        for k in 0..2000 {
            let r = k as f64 * 0.005;
            let g = f.g(r);
            assert!(g <= prev && g <= f.cap() && g > 0.0);
            prev = g;
        }
    }

    #[test]
    fn split_integral_is_additive() {
        let psi = InfluenceSpec::Oscillating { base: 0.5, amp: 0.25, freq: 1.0 };
        let f = WeightFloor::new(&psi, 0.2, 2.0);
        let whole = f.integral(30.0);
        let parts = f.integral(3.3) + f.integral_between(3.3, 30.0);
        assert!((whole - parts).abs() < 1e-12 * whole);
    }
}
