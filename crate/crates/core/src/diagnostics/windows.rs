//! Continuous-time maxima over time windows, as grid maxima with local
//! refinement and doubling-based acceptance.

use serde::{Deserialize, Serialize};

use super::{norm, DiagnosticsConfig, DiagnosticsError};
use crate::integrator::Trajectory;

/// Velocity spread over window `n`, i.e. `[nτ̄ − τ̄, nτ̄]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowExtrema {
    pub n: usize,
    pub start: f64,
    pub end: f64,
    /// `D_n = max_{i,j} max_{s,t} |v_i(s) − v_j(t)|`
    pub dn: f64,
    /// Grid points per window used for the accepted value.
    pub samples: usize,
    /// Change between the last two grid doublings.
    pub refinement_change: f64,
    pub accepted: bool,
    pub directions: Vec<DirectionalExtrema>,
}

/// Extremes of `⟨v_l(s), u⟩` over the window for one unit direction `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalExtrema {
    pub direction: Vec<f64>,
    pub max: f64,
    pub min: f64,
}

/// Velocity-sample cloud of one window.
struct Cloud {
    times: Vec<f64>,
    /// `[sample][agent][component]`, flattened.
    v: Vec<f64>,
    agents: usize,
    dim: usize,
}

impl Cloud {
    fn sample(traj: &Trajectory, a: f64, b: f64, samples: usize) -> Cloud {
        let (n, d) = (traj.agents(), traj.dim());
        let nd = n * d;
        let mut buf = vec![0.0; 2 * nd];
        let times: Vec<f64> = (0..samples).map(|k| grid_point(a, b, k, samples)).collect();
        let mut v = Vec::with_capacity(samples * nd);
        for &t in &times {
            traj.eval_unchecked(t, &mut buf);
            v.extend_from_slice(&buf[nd..]);
        }
        Cloud { times, v, agents: n, dim: d }
    }

    fn point(&self, k: usize, i: usize) -> &[f64] {
        let off = (k * self.agents + i) * self.dim;
        &self.v[off..off + self.dim]
    }

    /// Best `(value, k, l)` per unordered agent pair `(i, j)`, `i ≤ j`.
    fn pair_maxima(&self) -> Vec<(f64, usize, usize, usize, usize)> {
        let s = self.times.len();
        let mut best = Vec::new();
        for i in 0..self.agents {
            for j in i..self.agents {
                let mut top = (-1.0, 0, 0);
                for k in 0..s {
                    let p = self.point(k, i);
                    for l in 0..s {
                        let q = self.point(l, j);
                        let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                        if d2 > top.0 {
                            top = (d2, k, l);
                        }
                    }
                }
                best.push((top.0.sqrt(), i, top.1, j, top.2));
            }
        }
        best.sort_by(|a, b| b.0.total_cmp(&a.0));
        best
    }
}

#[inline]
fn grid_point(a: f64, b: f64, k: usize, samples: usize) -> f64 {
    if k + 1 == samples {
        b
    } else {
        a + (b - a) * k as f64 / (samples - 1) as f64
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Local coordinate ascent of `|v_i(s) − v_j(t)|` around a grid optimum.
fn refine_pair(traj: &Trajectory, i: usize, j: usize, s0: f64, t0: f64, a: f64, b: f64, h: f64) -> f64 {
    let nd = traj.agents() * traj.dim();
    let d = traj.dim();
    let mut scratch = vec![0.0; 2 * nd];
    let mut vel = |agent: usize, t: f64, out: &mut [f64]| {
        traj.eval_unchecked(t, &mut scratch);
        out.copy_from_slice(&scratch[nd + agent * d..nd + (agent + 1) * d]);
    };
    let (mut s, mut t) = (s0, t0);
    let mut vs = vec![0.0; d];
    let mut vt = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    vel(i, s, &mut vs);
    vel(j, t, &mut vt);
    let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut best = dist(&vs, &vt);
    for _ in 0..12 {
        let before = best;
        let (sa, sb) = ((s - h).max(a), (s + h).min(b));
        let (s_new, v_new) = golden_max(
            |x| {
                vel(i, x, &mut tmp);
                dist(&tmp, &vt)
            },
            sa,
            sb,
        );
        if v_new > best {
            s = s_new;
            best = v_new;
            vel(i, s, &mut vs);
        }
        let (ta, tb) = ((t - h).max(a), (t + h).min(b));
        let (t_new, v_new) = golden_max(
            |x| {
                vel(j, x, &mut tmp);
                dist(&vs, &tmp)
            },
            ta,
            tb,
        );
        if v_new > best {
            t = t_new;
            best = v_new;
            vel(j, t, &mut vt);
        }
        if best - before <= 1e-16 * best {
            break;
        }
    }
    best.sqrt()
}

/// Diameter of the velocity cloud over `[a, b]` on a grid of `samples`
/// points, refined locally around the strongest grid candidates.
fn cloud_diameter(traj: &Trajectory, a: f64, b: f64, samples: usize) -> (f64, Cloud) {
    let cloud = Cloud::sample(traj, a, b, samples);
    let pairs = cloud.pair_maxima();
    let grid_best = pairs.first().map_or(0.0, |p| p.0);
    if grid_best == 0.0 || samples < 2 {
        return (grid_best, cloud);
    }
    let h = (b - a) / (samples - 1) as f64;
    let refined = pairs
        .iter()
        .take(6)
        .filter(|p| p.0 >= 0.5 * grid_best)
        .map(|&(_, i, k, j, l)| refine_pair(traj, i, j, cloud.times[k], cloud.times[l], a, b, h))
        .fold(grid_best, f64::max);
    (refined, cloud)
}

fn window_bounds(traj: &Trajectory, n: usize) -> Result<(f64, f64), DiagnosticsError> {
    let tb = traj.tau_bar();
    let end = n as f64 * tb;
    if end > traj.t_end() * (1.0 + 1e-12) + 1e-12 {
        return Err(DiagnosticsError::WindowBeyondHorizon { n, end, horizon: traj.t_end() });
    }
    Ok((end - tb, end.min(traj.t_end())))
}

/// `D_n` and per-direction extremes on a single grid of `samples` points.
pub fn window_diameter(traj: &Trajectory, n: usize, samples: usize, directions: &[Vec<f64>]) -> Result<WindowExtrema, DiagnosticsError> {
    if samples < 2 {
        return Err(DiagnosticsError::Domain(format!("sample count must be ≥ 2, got {samples}")));
    }
    let (a, b) = window_bounds(traj, n)?;
    let (dn, cloud) = cloud_diameter(traj, a, b, samples);
    Ok(WindowExtrema {
        n,
        start: a,
        end: b,
        dn,
        samples,
        refinement_change: f64::NAN,
        accepted: false,
        directions: directional_extrema(&cloud, directions)?,
    })
}

/// `D_n` with grid doubling until two successive values agree to
/// `accept_rel · scale`.
pub fn window_diameter_accepted(traj: &Trajectory, n: usize, cfg: &DiagnosticsConfig, scale: f64, directions: &[Vec<f64>]) -> Result<WindowExtrema, DiagnosticsError> {
    let (a, b) = window_bounds(traj, n)?;
    let mut samples = cfg.window_samples.max(3);
    let (mut prev, _) = cloud_diameter(traj, a, b, samples);
    loop {
        let finer = 2 * samples - 1;
        let (dn, cloud) = cloud_diameter(traj, a, b, finer);
        let change = (dn - prev).abs();
        let tol = cfg.accept_rel * scale.max(dn);
        let accepted = change <= tol;
        if accepted || finer >= cfg.max_window_samples {
            return Ok(WindowExtrema {
                n,
                start: a,
                end: b,
                dn: dn.max(prev),
                samples: finer,
                refinement_change: change,
                accepted,
                directions: directional_extrema(&cloud, directions)?,
            });
        }
        prev = dn;
        samples = finer;
    }
}

fn directional_extrema(cloud: &Cloud, directions: &[Vec<f64>]) -> Result<Vec<DirectionalExtrema>, DiagnosticsError> {
    directions
        .iter()
        .map(|u| {
            if u.len() != cloud.dim || (norm(u) - 1.0).abs() > 1e-12 {
                return Err(DiagnosticsError::Domain(format!("direction {u:?} is not a unit {}-vector", cloud.dim)));
            }
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            for k in 0..cloud.times.len() {
                for i in 0..cloud.agents {
                    let p: f64 = cloud.point(k, i).iter().zip(u).map(|(a, b)| a * b).sum();
                    max = max.max(p);
                    min = min.min(p);
                }
            }
            Ok(DirectionalExtrema { direction: u.clone(), max, min })
        })
        .collect()
}

/// Largest `|x_i(s)|` (`positions = true`) or `|v_i(s)|` over `[−τ̄, 0]`.
pub(crate) fn history_norm_max(traj: &Trajectory, positions: bool, cfg: &DiagnosticsConfig) -> (f64, f64, bool) {
    let tb = traj.tau_bar();
    let (n, d) = (traj.agents(), traj.dim());
    let nd = n * d;
    let off = if positions { 0 } else { nd };
    let mut buf = vec![0.0; 2 * nd];
    let mut agent_norm = |i: usize, s: f64| {
        traj.eval_unchecked(s, &mut buf);
        norm(&buf[off + i * d..off + (i + 1) * d])
    };
    let mut estimate = |samples: usize| {
        let h = tb / (samples - 1) as f64;
        let mut best = 0.0f64;
        for i in 0..n {
            let (mut top, mut at) = (-1.0, 0.0);
            for k in 0..samples {
                let s = grid_point(-tb, 0.0, k, samples);
                let v = agent_norm(i, s);
                if v > top {
                    top = v;
                    at = s;
                }
            }
            let (_, refined) = golden_max(|s| agent_norm(i, s), (at - h).max(-tb), (at + h).min(0.0));
            best = best.max(top).max(refined);
        }
        best
    };
    let mut samples = cfg.window_samples.max(3);
    let mut prev = estimate(samples);
    loop {
        let finer = 2 * samples - 1;
        let cur = estimate(finer);
        let change = (cur - prev).abs();
        let accepted = change <= cfg.accept_rel * cur.max(f64::MIN_POSITIVE);
        if accepted || finer >= cfg.max_window_samples {
            return (cur.max(prev), change, accepted);
        }
        prev = cur;
        samples = finer;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7 && v.abs() < 1e-14);
    }
}
