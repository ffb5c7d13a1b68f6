//! Minimal self-contained SVG of a simulation trace: effect `y(t)` and
//! concentration `ȳ(t)` as polylines over shared time axis, no external
//! assets, deterministic coordinates.

use impulse_dose_core::sim::SimTrace;
use std::fmt::Write;

const W: f64 = 900.0;
const H: f64 = 420.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 44.0;

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let mut attr = String::with_capacity(12 * points.len());
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            attr.push(' ');
        }
        let _ = write!(attr, "{},{}", px(*x), px(*y));
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{attr}\"/>\n"
    )
}

/// Render the dense samples of `trace`. Returns a complete SVG document;
/// an empty trace yields just the axes.
pub fn trace_svg(trace: &SimTrace) -> String {
    let t_max = trace.dense.last().map(|s| s.t).unwrap_or(1.0).max(1e-9);
    let v_max = trace
        .dense
        .iter()
        .map(|s| s.ybar.max(s.y))
        .fold(1e-9_f64, f64::max);

    let plot_w = W - MARGIN_L - MARGIN_R;
    let plot_h = H - MARGIN_T - MARGIN_B;
    let to_x = |t: f64| MARGIN_L + plot_w * (t / t_max);
    let to_y = |v: f64| MARGIN_T + plot_h * (1.0 - v / v_max);

    let ybar: Vec<(f64, f64)> = trace.dense.iter().map(|s| (to_x(s.t), to_y(s.ybar))).collect();
    let y: Vec<(f64, f64)> = trace.dense.iter().map(|s| (to_x(s.t), to_y(s.y))).collect();

    let mut out = String::with_capacity(4096 + 24 * trace.dense.len());
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    // Axes.
    let x0 = px(MARGIN_L);
    let y0 = px(H - MARGIN_B);
    let x1 = px(W - MARGIN_R);
    let y1 = px(MARGIN_T);
    let _ = write!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    );
    // Axis extent labels.
    let _ = write!(
        out,
        "<text x=\"{x0}\" y=\"{ylab}\" font-family=\"monospace\" font-size=\"12\">0</text>\n\
         <text x=\"{x1}\" y=\"{ylab}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"end\">t = {tmax:.4} min</text>\n\
         <text x=\"{xlab}\" y=\"{y1v}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"end\">{vmax:.4}</text>\n",
        ylab = px(H - MARGIN_B + 16.0),
        tmax = t_max,
        xlab = px(MARGIN_L - 6.0),
        y1v = px(MARGIN_T + 10.0),
        vmax = v_max,
    );
    // Legend.
    let _ = write!(
        out,
        "<text x=\"{lx}\" y=\"{ly}\" font-family=\"monospace\" font-size=\"12\" \
         fill=\"#1f77b4\">ybar(t) concentration</text>\n\
         <text x=\"{lx}\" y=\"{ly2}\" font-family=\"monospace\" font-size=\"12\" \
         fill=\"#d62728\">y(t) effect</text>\n",
        lx = px(MARGIN_L + 8.0),
        ly = px(MARGIN_T + 14.0),
        ly2 = px(MARGIN_T + 30.0),
    );
    if !trace.dense.is_empty() {
        out.push_str(&polyline(&ybar, "#1f77b4"));
        out.push_str(&polyline(&y, "#d62728"));
    }
    out.push_str("</svg>\n");
    out
}
