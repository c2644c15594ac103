use std::fmt::Write;

use crate::error::{Error, Result};
use crate::optimizers::RunTrace;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
/// Suboptimality below this is drawn at the floor.
const FLOOR: f64 = 1e-16;

/// `f*` from the `f_star` header of the first trace that has one, otherwise
/// the smallest finite value seen in any trace.
pub fn reference_value(traces: &[RunTrace]) -> Option<f64> {
    traces
        .iter()
        .find_map(|t| t.header_value("f_star").and_then(|v| v.parse().ok()))
        .or_else(|| {
            traces
                .iter()
                .map(RunTrace::best_f)
                .filter(|f| f.is_finite())
                .reduce(f64::min)
        })
}

fn series(trace: &RunTrace, f_star: f64) -> Vec<(f64, f64)> {
    let scale = f_star.abs().max(1.0);
    trace
        .events
        .iter()
        .filter(|e| e.f_value.is_finite())
        .map(|e| {
            let gap = (e.f_value - f_star).max(FLOOR * scale);
            (e.total_oracle_calls() as f64, gap.log10())
        })
        .collect()
}

/// Renders `log10(f − f*)` against total oracle calls, one polyline per trace.
/// Output depends only on the inputs.
pub fn render_svg(traces: &[RunTrace], f_star: Option<f64>) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let f_star = f_star
        .or_else(|| reference_value(traces))
        .ok_or_else(|| Error::InvalidArgument("no finite function values to plot".into()))?;
    let all: Vec<Vec<(f64, f64)>> = traces.iter().map(|t| series(t, f_star)).collect();
    let pts = all.iter().flatten();
    let x_max = pts.clone().map(|p| p.0).fold(1.0, f64::max);
    let y_lo = pts.clone().map(|p| p.1).fold(f64::INFINITY, f64::min).floor();
    let y_hi = pts.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
    let (y_lo, y_hi) = if y_lo.is_finite() && y_hi > y_lo {
        (y_lo, y_hi)
    } else if y_lo.is_finite() {
        (y_lo - 1.0, y_lo + 1.0)
    } else {
        (0.0, 1.0)
    };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let y_step = ((y_hi - y_lo) / 8.0).ceil().max(1.0);
    let mut y = y_lo;
    while y <= y_hi + 1e-9 {
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            y as i64
        );
        y += y_step;
    }
    for k in 0..=4 {
        let x = x_max * k as f64 / 4.0;
        let px = sx(x);
        let base = TOP + plot_h;
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{base:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            base + 5.0,
            base + 18.0,
            x.round() as u64
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">total oracle calls</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">f(x) - f*</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, (trace, pts)) in traces.iter().zip(&all).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let label = trace
            .header_value("label")
            .or_else(|| trace.method())
            .unwrap_or("trace");
        let ly = TOP + 15.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
