//! One-dimensional quadrature.

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, with Richardson correction on accepted panels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    if b < a {
        return -adaptive_simpson(f, b, a, tol);
    }
    // a few coarse panels up front so narrow features are not skipped
    const PANELS: usize = 4;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == PANELS { b } else { lo + h };
            let (flo, fhi) = (f(lo), f(hi));
            let m = 0.5 * (lo + hi);
            let fm = f(m);
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
            recurse(f, lo, hi, flo, fm, fhi, whole, tol / PANELS as f64, MAX_DEPTH)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || b <= m {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson split at the given interior breakpoints, so each panel
/// integrates a smooth piece.
pub fn piecewise_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    let pieces = breaks.iter().filter(|&&x| x > a && x < b).count() + 1;
    for &x in breaks.iter().filter(|&&x| x > a && x < b).chain(std::iter::once(&b)) {
        total += adaptive_simpson(f, lo, x, tol / pieces as f64);
        lo = x;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(&|x: f64| 3.0 * x * x + 1.0, 0.0, 2.0, 1e-14);
        assert!((v - 10.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_transcendental() {
        let v = adaptive_simpson(&|x: f64| (1.0 + x * x).powf(-0.5), 0.0, 50.0, 1e-13);
        let exact = 50f64.asinh();
        assert!(((v - exact) / exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn kink_handled_with_breakpoint() {
        let f = |x: f64| x.min(1.0);
        let v = piecewise_simpson(&f, 0.0, 3.0, &[1.0], 1e-14);
        assert!((v - 2.5).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits() {
        let v = adaptive_simpson(&|x: f64| x, 1.0, 0.0, 1e-14);
        assert!((v + 0.5).abs() < 1e-15);
    }
}
