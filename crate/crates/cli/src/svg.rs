//! Static SVG of `d_V` against the certified bounds, log scale.

use std::fmt::Write as _;

use flockcert::diagnostics::DiagnosticsSeries;

const W: f64 = 720.0;
const H: f64 = 420.0;
const PAD: f64 = 50.0;

fn polyline(out: &mut String, t: &[f64], y: &[f64], map: &dyn Fn(f64, f64) -> Option<(f64, f64)>, color: &str) {
    let pts: Vec<String> = t.iter().zip(y).filter_map(|(&a, &b)| map(a, b)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    if pts.len() > 1 {
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
    }
}

pub fn decay_plot(s: &DiagnosticsSeries) -> String {
    let curves: Vec<(&str, &str, &[f64])> = [
        Some(("d_V", "navy", &s.d_v[..])),
        s.envelope.as_deref().map(|e| ("envelope", "firebrick", e)),
        s.decay_bound.as_deref().map(|e| ("exponential bound", "seagreen", e)),
    ]
    .into_iter()
    .flatten()
    .collect();
    let (t0, t1) = (s.t.first().copied().unwrap_or(0.0), s.t.last().copied().unwrap_or(1.0));
    let logs = curves.iter().flat_map(|c| c.2.iter()).filter(|v| **v > 0.0 && v.is_finite()).map(|v| v.log10());
    let (mut lo, mut hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    lo = lo.max(hi - 16.0).floor();
    hi = hi.ceil().max(lo + 1.0);
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let map = move |t: f64, v: f64| {
        if !(v > 0.0) || !v.is_finite() {
            return None;
        }
        let x = PAD + (t - t0) / span_t * (W - 2.0 * PAD);
        let y = H - PAD - (v.log10().max(lo) - lo) / (hi - lo) * (H - 2.0 * PAD);
        Some((x, y))
    };
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="gray"/>"#, W - 2.0 * PAD, H - 2.0 * PAD).unwrap();
    for e in (lo as i64)..=(hi as i64) {
        let y = H - PAD - (e as f64 - lo) / (hi - lo) * (H - 2.0 * PAD);
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, PAD - 4.0, y + 4.0).unwrap();
    }
    writeln!(out, r#"<text x="{PAD}" y="{}">t = {t0:.3}</text>"#, H - PAD + 16.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">t = {t1:.3}</text>"#, W - PAD, H - PAD + 16.0).unwrap();
    for (k, (name, color, ys)) in curves.iter().enumerate() {
        polyline(&mut out, &s.t, ys, &map, color);
        writeln!(out, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, PAD + 8.0 + 150.0 * k as f64, PAD - 10.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
